//! Synthetic perimeter-patrol scenarios: a rounded-rectangle path driven at
//! constant speed, an optional obstacle-avoidance detour on one lap, and a
//! minimal first-person renderer.

mod path;
mod render;

pub use path::{PatrolPath, SegmentKind};
pub use render::{heading_sequence, render_fpv, render_frame, save_frames, Pose, RenderParams, OBSTACLE_SHADE};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Point, Rect, Sample, Trajectory};

/// Static obstacle drawn as a vertical cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub pos: [f64; 2],
    pub radius: f64,
    pub height: f64,
    /// Inclusive range of time indices during which the obstacle stands in
    /// the scene; `None` means always.
    pub present: Option<(u64, u64)>,
}

impl Obstacle {
    pub fn is_present(&self, k: u64) -> bool {
        self.present.is_none_or(|(a, b)| (a..=b).contains(&k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub arena: Rect,
    /// Rectangle whose rounded outline is the patrol path.
    pub track: Rect,
    pub corner_radius: f64,
    /// m/s
    pub lap_speed: f64,
    pub n_laps: usize,
    /// Sampling interval, seconds.
    pub dt: f64,
    /// Std of the i.i.d. Gaussian position noise, meters.
    pub noise_std: f64,
    pub seed: u64,
    pub obstacles: Vec<Obstacle>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            arena: Rect::new([0.0, 0.0], [30.0, 20.0]),
            track: Rect::new([4.0, 4.0], [26.0, 16.0]),
            corner_radius: 1.5,
            lap_speed: 1.25,
            n_laps: 10,
            dt: 0.2,
            noise_std: 0.03,
            seed: 0,
            obstacles: Vec::new(),
        }
    }
}

/// Lateral detour around a standing obstacle on the bottom straight of one
/// lap. The offset rises with a raised-cosine ramp, holds at `depth`, and
/// falls back with a mirrored ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Avoidance {
    pub lap: usize,
    pub depth: f64,
    pub ramp_length: f64,
    pub hold_length: f64,
    /// Center of the detour as a fraction of the bottom straight.
    pub at: f64,
}

impl Avoidance {
    pub fn new(lap: usize, depth: f64) -> Self {
        Self {
            lap,
            depth,
            ramp_length: 1.5,
            hold_length: 3.0,
            at: 0.5,
        }
    }

    pub fn length(&self) -> f64 {
        2.0 * self.ramp_length + self.hold_length
    }

    /// Offset at distance `u` into the detour window.
    pub fn offset(&self, u: f64) -> f64 {
        use std::f64::consts::PI;
        let (ramp, hold) = (self.ramp_length, self.hold_length);
        if u <= 0.0 || u >= self.length() {
            0.0
        } else if u < ramp {
            self.depth * 0.5 * (1.0 - (PI * u / ramp).cos())
        } else if u <= ramp + hold {
            self.depth
        } else {
            self.depth * 0.5 * (1.0 + (PI * (u - ramp - hold) / ramp).cos())
        }
    }
}

/// Simulated run with per-sample ground truth.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub trajectory: Trajectory,
    pub lap: Vec<usize>,
    pub in_detour: Vec<bool>,
    /// Noise-free positions.
    pub clean: Vec<Point>,
    /// The obstacle being avoided, if any.
    pub obstacle: Option<Obstacle>,
}

impl SimRun {
    /// Labels CSV `k,in_detour`.
    pub fn write_labels<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["k", "in_detour"])?;
        for (s, d) in self.trajectory.samples().iter().zip(&self.in_detour) {
            wtr.write_record([s.k.to_string(), u8::from(*d).to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn geometry(msg: impl Into<String>) -> Error {
    Error::Geometry(msg.into())
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, t) = (&self.arena, &self.track);
        if !(self.lap_speed > 0.0) {
            return Err(geometry("lap_speed must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(geometry("dt must be positive"));
        }
        if self.n_laps == 0 {
            return Err(geometry("n_laps must be at least 1"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(geometry("noise_std must be non-negative"));
        }
        if !(self.corner_radius >= 0.0) {
            return Err(geometry("corner_radius must be non-negative"));
        }
        if !(t.width() > 0.0 && t.height() > 0.0) {
            return Err(geometry("track rectangle is empty"));
        }
        if t.min[0] <= a.min[0] || t.min[1] <= a.min[1] || t.max[0] >= a.max[0] || t.max[1] >= a.max[1] {
            return Err(geometry("track must lie strictly inside the arena"));
        }
        if 2.0 * self.corner_radius > t.width().min(t.height()) {
            return Err(geometry("corner radius exceeds half the track side"));
        }
        Ok(())
    }

    pub fn path(&self) -> PatrolPath {
        PatrolPath::new(self.track, self.corner_radius)
    }

    /// Obstacle standing on the path at the center of `avoidance`.
    pub fn detour_obstacle(&self, avoidance: &Avoidance) -> Obstacle {
        let path = self.path();
        let (start, _) = path.bottom_straight();
        let center = start + avoidance.at * path.straight_len_x();
        let (pos, _, _) = path.point(center);
        Obstacle {
            pos: [pos.x, pos.y],
            radius: 0.3,
            height: 1.7,
            present: None,
        }
    }
}

/// Constant-speed traversal of the patrol path, `n_laps` times.
///
/// Every lap restarts at arc length 0 (the entry of the first corner), so
/// laps are sample-aligned. Deterministic in `spec.seed`.
pub fn simulate_trajectory(spec: &SceneSpec, avoidance: Option<Avoidance>) -> Result<SimRun> {
    spec.validate()?;
    let path = spec.path();
    let step = spec.lap_speed * spec.dt;
    let per_lap = (path.length() / step).ceil() as usize;

    let window = match avoidance {
        None => None,
        Some(av) => {
            if av.lap >= spec.n_laps {
                return Err(geometry(format!("avoidance lap {} of {}", av.lap, spec.n_laps)));
            }
            let half_width = 0.5 * spec.arena.width().min(spec.arena.height());
            if !(av.depth > 0.0 && av.depth < half_width) {
                return Err(geometry(format!(
                    "detour depth {} must lie in (0, {half_width})",
                    av.depth
                )));
            }
            if !(av.ramp_length > 0.0 && av.hold_length >= 0.0 && (0.0..=1.0).contains(&av.at)) {
                return Err(geometry("detour ramp/hold/position out of range"));
            }
            let (start, len) = path.bottom_straight();
            let center = start + av.at * len;
            let w0 = center - 0.5 * av.length();
            if w0 < start || w0 + av.length() > start + len {
                return Err(geometry("detour does not fit on the straight"));
            }
            if spec.track.min[1] + av.depth >= spec.arena.max[1] {
                return Err(geometry("detour leaves the arena"));
            }
            Some((av, w0))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_std > 0.0)
        .then(|| Normal::new(0.0, spec.noise_std).expect("finite positive std"));

    let n = per_lap * spec.n_laps;
    let mut samples = Vec::with_capacity(n);
    let mut lap = Vec::with_capacity(n);
    let mut in_detour = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);

    for l in 0..spec.n_laps {
        for i in 0..per_lap {
            let k = (l * per_lap + i) as u64;
            let s = i as f64 * step;
            let (base, tangent, _) = path.point(s);
            let mut pos = base;
            let mut inside = false;
            if let Some((av, w0)) = window.filter(|(av, _)| av.lap == l) {
                let u = s - w0;
                if u > 0.0 && u < av.length() {
                    let left = Point::new(-tangent.y, tangent.x);
                    pos += left * av.offset(u);
                    inside = true;
                }
            }
            clean.push(pos);
            if let Some(nd) = &noise {
                pos += Point::new(nd.sample(&mut rng), nd.sample(&mut rng));
            }
            let mut sample = Sample::new(k, k as f64 * spec.dt, pos);
            sample.frame_id = Some(k);
            samples.push(sample);
            lap.push(l);
            in_detour.push(inside);
        }
    }

    // The obstacle stands in the scene for the whole avoidance lap.
    let obstacle = avoidance.map(|av| {
        let first = (av.lap * per_lap) as u64;
        Obstacle {
            present: Some((first, first + per_lap as u64 - 1)),
            ..spec.detour_obstacle(&av)
        }
    });

    Ok(SimRun {
        trajectory: Trajectory::new(samples, spec.dt)?,
        lap,
        in_detour,
        clean,
        obstacle,
    })
}
