use serde::{Deserialize, Serialize};

use super::{GpHyper, GpModel};
use crate::error::{invalid, Error, Result};
use crate::model::{derive_velocities, Point, SpatialGrid, Trajectory, Velocity, VelocityField};

/// Cells whose predictive variance stays above `variance_threshold · σ_f²`
/// in either channel are masked out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskPolicy {
    pub variance_threshold: f64,
}

impl Default for MaskPolicy {
    fn default() -> Self {
        Self {
            variance_threshold: 0.5,
        }
    }
}

impl MaskPolicy {
    pub fn new(variance_threshold: f64) -> Result<Self> {
        if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
            return Err(invalid(
                "variance_threshold",
                format!("must lie in (0, 1], got {variance_threshold}"),
            ));
        }
        Ok(Self { variance_threshold })
    }
}

/// A built field and how much of the pooled data went into it.
#[derive(Debug, Clone)]
pub struct FieldBuild {
    pub field: VelocityField,
    pub pooled_points: usize,
    pub used_points: usize,
    /// Stride used to thin the pooled points; 1 when nothing was dropped.
    pub stride: usize,
}

/// Fits independent GPs to the pooled `(position, vx)` and `(position, vy)`
/// pairs of all trajectories and evaluates them at every cell center.
///
/// Each forward-difference velocity is attached to the midpoint of its step.
/// At the start point the position noise of `pos_k` enters the velocity with
/// the opposite sign, and on dense data the GP would fit that correlation as
/// a lateral velocity gradient of `-1/dt`; at the midpoint the two errors are
/// uncorrelated.
///
/// When more than `max_points` pairs are pooled, each trajectory is thinned by
/// differencing over `stride` steps instead of one: the velocity
/// `(pos_{k+s} - pos_k) / (s·dt)` is the mean of the `s` one-step velocities it
/// replaces, so the telescoping cancellation of position noise is kept. The
/// stride is reported in the result.
pub fn build_field(
    trajectories: &[Trajectory],
    grid: &SpatialGrid,
    hyper: GpHyper,
    mask: MaskPolicy,
    max_points: Option<usize>,
) -> Result<FieldBuild> {
    MaskPolicy::new(mask.variance_threshold)?;
    let usable: Vec<&Trajectory> = trajectories.iter().filter(|t| t.len() >= 2).collect();
    let pooled_points: usize = usable.iter().map(|t| t.len() - 1).sum();
    if pooled_points == 0 {
        return Err(Error::InsufficientSamples { needed: 2, got: 0 });
    }
    let stride = match max_points {
        Some(0) => return Err(invalid("max_points", "must be positive")),
        Some(cap) if pooled_points > cap => pooled_points.div_ceil(cap),
        _ => 1,
    };
    if stride > 1 {
        log::warn!(
            "thinning {pooled_points} training pairs by stride {stride} to respect the GP point cap"
        );
    }

    let mut inputs: Vec<Point> = Vec::new();
    let mut vx = Vec::new();
    let mut vy = Vec::new();
    for t in usable {
        let steps = if stride == 1 {
            derive_velocities(t)?
        } else {
            coarse_velocities(t, stride)
        };
        for (p, v) in steps {
            inputs.push(p + v * (0.5 * t.dt()));
            vx.push(v.x);
            vy.push(v.y);
        }
    }

    let gp_x = GpModel::fit(&inputs, &vx, hyper)?;
    let gp_y = gp_x.with_targets(&vy)?;

    let centers = grid.cell_centers();
    let px = gp_x.predict(&centers);
    let py = gp_y.predict(&centers);
    let limit = mask.variance_threshold * hyper.signal_variance;

    let mean = px
        .iter()
        .zip(&py)
        .map(|((mx, _), (my, _))| Velocity::new(*mx, *my))
        .collect();
    let variance: Vec<[f64; 2]> = px.iter().zip(&py).map(|((_, vx), (_, vy))| [*vx, *vy]).collect();
    let evidence = variance.iter().map(|v| v[0].max(v[1]) <= limit).collect();

    Ok(FieldBuild {
        field: VelocityField::new(*grid, mean, variance, evidence)?,
        pooled_points,
        used_points: inputs.len(),
        stride,
    })
}

/// Velocities over spans of `stride` steps, each paired with a start point
/// placed so that `start + v·dt/2` is the span midpoint. The final span may be
/// shorter.
fn coarse_velocities(t: &Trajectory, stride: usize) -> Vec<(Point, Velocity)> {
    let pos: Vec<Point> = t.positions().collect();
    let dt = t.dt();
    let last = pos.len() - 1;
    (0..last)
        .step_by(stride)
        .map(|a| {
            let b = (a + stride).min(last);
            let v = (pos[b] - pos[a]) / ((b - a) as f64 * dt);
            let mid = (pos[a] + pos[b]) * 0.5;
            (mid - v * (0.5 * dt), v)
        })
        .collect()
}
