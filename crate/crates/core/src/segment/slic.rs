use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VelocityImage;
use crate::error::{invalid, Error, Result};
use crate::model::zone::member_mean;
use crate::model::{Velocity, VelocityField, Zone, ZoneGroup, ZoneMap};

/// Zones whose member directions have a circular variance below this are
/// labeled [`ZoneGroup::Straight`].
pub const CURVE_VARIANCE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicParams {
    pub n_superpixels: usize,
    pub compactness: f64,
    pub max_iters: usize,
    pub min_zone_cells: usize,
    /// Drives the phase of the seeding grid.
    pub seed: u64,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            n_superpixels: 16,
            compactness: 250.0,
            max_iters: 10,
            min_zone_cells: 4,
            seed: 0,
        }
    }
}

impl SlicParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_superpixels == 0 {
            return Err(invalid("n_superpixels", "must be at least 1"));
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return Err(invalid("compactness", format!("must be positive, got {}", self.compactness)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    color: [f64; 2],
    pos: [f64; 2],
}

struct Slic<'a> {
    image: &'a VelocityImage,
    width: usize,
    height: usize,
    /// Grid interval S.
    interval: f64,
    /// m² / S²
    spatial_weight: f64,
}

impl Slic<'_> {
    fn color(&self, m: usize) -> [f64; 2] {
        let [r, _, b] = self.image.pixels[m];
        [f64::from(r), f64::from(b)]
    }

    fn pos(&self, m: usize) -> [f64; 2] {
        [(m / self.width) as f64, (m % self.width) as f64]
    }

    fn valid(&self, m: usize) -> bool {
        self.image.valid[m]
    }

    fn distance2(&self, m: usize, c: &Center) -> f64 {
        let col = self.color(m);
        let pos = self.pos(m);
        let dc = (col[0] - c.color[0]).powi(2) + (col[1] - c.color[1]).powi(2);
        let ds = (pos[0] - c.pos[0]).powi(2) + (pos[1] - c.pos[1]).powi(2);
        dc + ds * self.spatial_weight
    }

    fn gradient(&self, m: usize) -> f64 {
        let (row, col) = (m / self.width, m % self.width);
        let at = |r: usize, c: usize| {
            let i = r * self.width + c;
            if self.valid(i) {
                self.color(i)
            } else {
                self.color(m)
            }
        };
        let up = at(row.saturating_sub(1), col);
        let down = at((row + 1).min(self.height - 1), col);
        let left = at(row, col.saturating_sub(1));
        let right = at(row, (col + 1).min(self.width - 1));
        (0..2)
            .map(|ch| (down[ch] - up[ch]).powi(2) + (right[ch] - left[ch]).powi(2))
            .sum()
    }

    /// Grid-seeded centers snapped onto unmasked cells, then moved to the
    /// lowest-gradient cell of their 3×3 neighbourhood.
    fn seeds(&self, unmasked: &[usize], target: usize, seed: u64) -> Vec<usize> {
        let s = self.interval;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase = [rng.random::<f64>() * s, rng.random::<f64>() * s];

        let mut seeds: Vec<usize> = Vec::new();
        let mut r = phase[0];
        while r < self.height as f64 {
            let mut c = phase[1];
            while c < self.width as f64 {
                let nearest = unmasked
                    .iter()
                    .copied()
                    .map(|m| {
                        let p = self.pos(m);
                        (m, (p[0] - r).powi(2) + (p[1] - c).powi(2))
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((m, d2)) = nearest {
                    let p = self.pos(m);
                    let crowded = seeds.iter().any(|&o| {
                        let q = self.pos(o);
                        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) < 0.25 * s * s
                    });
                    if d2 <= s * s && !crowded {
                        seeds.push(m);
                    }
                }
                c += s;
            }
            r += s;
        }
        if seeds.is_empty() {
            seeds.push(unmasked[0]);
        }
        if seeds.len() > target {
            seeds = self.farthest_subset(unmasked, &seeds, target);
        }

        seeds
            .into_iter()
            .map(|m| {
                let (row, col) = (m / self.width, m % self.width);
                let mut best = (self.gradient(m), m);
                for r in row.saturating_sub(1)..=(row + 1).min(self.height - 1) {
                    for c in col.saturating_sub(1)..=(col + 1).min(self.width - 1) {
                        let i = r * self.width + c;
                        if self.valid(i) {
                            let g = self.gradient(i);
                            if g < best.0 {
                                best = (g, i);
                            }
                        }
                    }
                }
                best.1
            })
            .collect()
    }

    /// Farthest-point subset of `seeds`, starting from the seed closest to
    /// the centroid of the unmasked cells.
    fn farthest_subset(&self, unmasked: &[usize], seeds: &[usize], k: usize) -> Vec<usize> {
        let n = unmasked.len() as f64;
        let centroid = unmasked.iter().fold([0.0, 0.0], |acc, &m| {
            let p = self.pos(m);
            [acc[0] + p[0] / n, acc[1] + p[1] / n]
        });
        let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        let first = *seeds
            .iter()
            .min_by(|a, b| d2(self.pos(**a), centroid).total_cmp(&d2(self.pos(**b), centroid)))
            .expect("non-empty seeds");
        let mut chosen = vec![first];
        let mut gap: Vec<f64> = seeds.iter().map(|&s| d2(self.pos(s), self.pos(first))).collect();
        while chosen.len() < k {
            let (i, _) = gap
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty seeds");
            let next = seeds[i];
            chosen.push(next);
            for (g, &s) in gap.iter_mut().zip(seeds) {
                *g = g.min(d2(self.pos(s), self.pos(next)));
            }
        }
        chosen
    }

    fn cluster(&self, unmasked: &[usize], seeds: &[usize], max_iters: usize) -> Vec<usize> {
        let mut centers: Vec<Center> = seeds
            .iter()
            .map(|&m| Center {
                color: self.color(m),
                pos: self.pos(m),
            })
            .collect();
        let window = 2.0 * self.interval;
        let mut labels = vec![usize::MAX; unmasked.len()];

        for _ in 0..max_iters {
            let mut changed = false;
            for (i, &m) in unmasked.iter().enumerate() {
                let p = self.pos(m);
                let in_window = |c: &Center| {
                    (p[0] - c.pos[0]).abs() <= window && (p[1] - c.pos[1]).abs() <= window
                };
                let best = |restrict: bool| {
                    centers
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !restrict || in_window(c))
                        .map(|(j, c)| (j, self.distance2(m, c)))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .map(|(j, _)| j)
                };
                let label = best(true).or_else(|| best(false)).expect("at least one center");
                if labels[i] != label {
                    labels[i] = label;
                    changed = true;
                }
            }

            let mut sums = vec![([0.0f64; 2], [0.0f64; 2], 0usize); centers.len()];
            for (i, &m) in unmasked.iter().enumerate() {
                let (col, pos) = (self.color(m), self.pos(m));
                let s = &mut sums[labels[i]];
                s.0[0] += col[0];
                s.0[1] += col[1];
                s.1[0] += pos[0];
                s.1[1] += pos[1];
                s.2 += 1;
            }
            for (c, (col, pos, n)) in centers.iter_mut().zip(&sums) {
                if *n > 0 {
                    let n = *n as f64;
                    *c = Center {
                        color: [col[0] / n, col[1] / n],
                        pos: [pos[0] / n, pos[1] / n],
                    };
                }
            }
            if !changed {
                break;
            }
        }
        labels
    }
}

/// Splits each cluster into its 4-connected components. Returns per-cell
/// region ids (`usize::MAX` for masked cells) and the region cell lists.
fn connected_regions(
    image: &VelocityImage,
    unmasked: &[usize],
    labels: &[usize],
) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n_cells = image.valid.len();
    let w = image.width;
    let mut cluster = vec![usize::MAX; n_cells];
    for (i, &m) in unmasked.iter().enumerate() {
        cluster[m] = labels[i];
    }
    let mut region = vec![usize::MAX; n_cells];
    let mut regions: Vec<Vec<usize>> = Vec::new();
    for &start in unmasked {
        if region[start] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut cells = vec![start];
        region[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(m) = queue.pop_front() {
            let (row, col) = (m / w, m % w);
            let nbrs = [
                (row > 0).then(|| m - w),
                (col > 0).then(|| m - 1),
                (col + 1 < w).then(|| m + 1),
                (row + 1 < image.height).then(|| m + w),
            ];
            for n in nbrs.into_iter().flatten() {
                if region[n] == usize::MAX && cluster[n] == cluster[m] && image.valid[n] {
                    region[n] = id;
                    cells.push(n);
                    queue.push_back(n);
                }
            }
        }
        regions.push(cells);
    }
    (region, regions)
}

fn mean_color(image: &VelocityImage, cells: &[usize]) -> [f64; 2] {
    let n = cells.len() as f64;
    cells.iter().fold([0.0, 0.0], |acc, &m| {
        let [r, _, b] = image.pixels[m];
        [acc[0] + f64::from(r) / n, acc[1] + f64::from(b) / n]
    })
}

/// Merges regions smaller than `min_cells` into their most color-similar
/// 4-adjacent region until none is left (isolated islands stay as they are).
fn merge_small(image: &VelocityImage, region: &mut [usize], regions: &mut [Vec<usize>], min_cells: usize) {
    let w = image.width;
    loop {
        let mut order: Vec<usize> = (0..regions.len())
            .filter(|&r| !regions[r].is_empty() && regions[r].len() < min_cells)
            .collect();
        order.sort_by_key(|&r| (regions[r].len(), r));

        let mut merged = false;
        for small in order {
            let mut neighbours: Vec<usize> = Vec::new();
            for &m in &regions[small] {
                let (row, col) = (m / w, m % w);
                let nbrs = [
                    (row > 0).then(|| m - w),
                    (col > 0).then(|| m - 1),
                    (col + 1 < w).then(|| m + 1),
                    (row + 1 < image.height).then(|| m + w),
                ];
                for n in nbrs.into_iter().flatten() {
                    let r = region[n];
                    if r != usize::MAX && r != small && !neighbours.contains(&r) {
                        neighbours.push(r);
                    }
                }
            }
            if neighbours.is_empty() {
                continue;
            }
            let own = mean_color(image, &regions[small]);
            let d2 = |r: usize| {
                let c = mean_color(image, &regions[r]);
                (c[0] - own[0]).powi(2) + (c[1] - own[1]).powi(2)
            };
            let target = neighbours
                .iter()
                .copied()
                .min_by(|&a, &b| d2(a).total_cmp(&d2(b)).then(a.cmp(&b)))
                .expect("non-empty neighbours");
            let cells = std::mem::take(&mut regions[small]);
            for &m in &cells {
                region[m] = target;
            }
            regions[target].extend(cells);
            merged = true;
            break;
        }
        if !merged {
            break;
        }
    }
}

/// Circular variance `1 − ‖mean unit direction‖` of the moving velocities.
/// Velocities shorter than 1e-9 m/s carry no direction and are skipped; an
/// empty set has variance 0.
pub fn circular_variance(velocities: impl IntoIterator<Item = Velocity>) -> f64 {
    let (sum, n) = velocities
        .into_iter()
        .filter(|v| v.norm() > 1e-9)
        .fold((Velocity::zeros(), 0usize), |(s, n), v| (s + v.normalize(), n + 1));
    if n == 0 {
        0.0
    } else {
        (1.0 - sum.norm() / n as f64).max(0.0)
    }
}

/// SLIC-style superpixel partition of the unmasked cells of `field`, using
/// the encoded colors of `image` and the cell positions as features.
///
/// Clusters are split into 4-connected regions; regions smaller than
/// `min_zone_cells` are merged into the most similar neighbour. Zone ids
/// follow the smallest member cell index.
pub fn segment(field: &VelocityField, image: &VelocityImage, params: &SlicParams) -> Result<ZoneMap> {
    params.validate()?;
    if image.valid != field.evidence || image.width * image.height != field.grid.len() {
        return Err(Error::DimensionMismatch(
            "image and field disagree on grid or mask".into(),
        ));
    }
    let unmasked: Vec<usize> = field.unmasked_cells().collect();
    if unmasked.is_empty() {
        return Err(Error::AllMasked);
    }
    let target = params.n_superpixels.min(unmasked.len());
    let interval = (unmasked.len() as f64 / target as f64).sqrt().max(1.0);
    let slic = Slic {
        image,
        width: image.width,
        height: image.height,
        interval,
        spatial_weight: params.compactness * params.compactness / (interval * interval),
    };

    let seeds = slic.seeds(&unmasked, target, params.seed);
    let labels = slic.cluster(&unmasked, &seeds, params.max_iters);
    let (mut region, mut regions) = connected_regions(image, &unmasked, &labels);
    merge_small(image, &mut region, &mut regions, params.min_zone_cells);

    let mut cell_lists: Vec<Vec<usize>> = regions.into_iter().filter(|r| !r.is_empty()).collect();
    for cells in &mut cell_lists {
        cells.sort_unstable();
    }
    cell_lists.sort_by_key(|c| c[0]);

    let zones = cell_lists
        .into_iter()
        .enumerate()
        .map(|(i, cells)| {
            let u = member_mean(field, &cells);
            let spread = circular_variance(cells.iter().map(|&m| field.mean[m]));
            Zone {
                id: i + 1,
                u,
                group: if spread < CURVE_VARIANCE_THRESHOLD {
                    ZoneGroup::Straight
                } else {
                    ZoneGroup::Curve
                },
                cells,
            }
        })
        .collect();
    ZoneMap::new(zones, field.grid.len())
}
