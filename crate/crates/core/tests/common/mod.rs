//! Reference implementations used as test oracles. They are written
//! independently of the library: plain `Vec<f64>` arithmetic, no nalgebra.

#![allow(dead_code)]

/// Solves `a · x = b_j` for every right-hand side by Gaussian elimination
/// with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve_many(mut a: Vec<Vec<f64>>, mut rhs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for b in rhs.iter_mut() {
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            for b in rhs.iter_mut() {
                b[row] -= f * b[col];
            }
        }
    }
    rhs.into_iter()
        .map(|mut b| {
            for row in (0..n).rev() {
                let mut s = b[row];
                for c in row + 1..n {
                    s -= a[row][c] * b[c];
                }
                b[row] = s / a[row][row];
            }
            b
        })
        .collect()
}

pub struct Hyper {
    pub sf2: f64,
    pub ell: f64,
    pub sn2: f64,
}

fn kern(h: &Hyper, a: (f64, f64), b: (f64, f64)) -> f64 {
    let d2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    h.sf2 * (-d2 / (2.0 * h.ell * h.ell)).exp()
}

/// Dense GP posterior `(mean, variance)` at every query point.
pub fn gp_posterior(
    h: &Hyper,
    xs: &[(f64, f64)],
    ys: &[f64],
    queries: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let n = xs.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| kern(h, xs[i], xs[j]) + if i == j { h.sn2 } else { 0.0 })
                .collect()
        })
        .collect();
    let kstar: Vec<Vec<f64>> = queries
        .iter()
        .map(|q| xs.iter().map(|x| kern(h, *x, *q)).collect())
        .collect();
    let mut rhs = vec![ys.to_vec()];
    rhs.extend(kstar.iter().cloned());
    let sol = solve_many(k, rhs);
    let alpha = &sol[0];
    queries
        .iter()
        .enumerate()
        .map(|(qi, _)| {
            let ks = &kstar[qi];
            let mean: f64 = ks.iter().zip(alpha).map(|(a, b)| a * b).sum();
            let red: f64 = ks.iter().zip(&sol[qi + 1]).map(|(a, b)| a * b).sum();
            (mean, h.sf2 - red)
        })
        .collect()
}

/// Pooled GP training pairs of a sampled path: each step's finite-difference
/// velocity at the midpoint of the step.
pub fn midpoint_pairs(path: &[(f64, f64)], dt: f64) -> (Vec<(f64, f64)>, Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut vx = Vec::new();
    let mut vy = Vec::new();
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        xs.push(((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0));
        vx.push((b.0 - a.0) / dt);
        vy.push((b.1 - a.1) / dt);
    }
    (xs, vx, vy)
}

/// One scored step of the scalar-covariance position filter.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub eps: (f64, f64),
    pub xi: f64,
}

/// Position filter with isotropic `P = p·I`, `Q = q·I`, `R = r·I`, advanced by
/// `x ← x + dt·u(zone)` and scored against each measurement. `zone_velocity`
/// returns `None` for a measurement outside every zone, in which case the
/// filter restarts at that measurement.
pub fn scalar_filter(
    zs: &[(f64, f64)],
    dt: f64,
    q: f64,
    r: f64,
    p0: f64,
    zone_velocity: impl Fn((f64, f64)) -> Option<(f64, f64)>,
) -> Vec<Option<StepRecord>> {
    let mut x = zs[0];
    let mut p = p0;
    let mut out = Vec::new();
    for &z in &zs[1..] {
        match zone_velocity(z) {
            Some(u) => {
                let xp = (x.0 + dt * u.0, x.1 + dt * u.1);
                let pp = p + q;
                let eps = (z.0 - xp.0, z.1 - xp.1);
                let g = pp / (pp + r);
                x = (xp.0 + g * eps.0, xp.1 + g * eps.1);
                p = (1.0 - g) * (1.0 - g) * pp + g * g * r;
                out.push(Some(StepRecord {
                    eps,
                    xi: eps.0.hypot(eps.1),
                }));
            }
            None => {
                x = z;
                p = p0;
                out.push(None);
            }
        }
    }
    out
}
