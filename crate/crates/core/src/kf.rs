//! Per-zone Kalman filters over position with the zone velocity as control
//! input. The innovation norm ξ of the active filter is the abnormality
//! signal.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Point, SpatialGrid, Trajectory, Velocity, ZoneId, ZoneMap};

/// (0.05 m)² per step.
pub const DEFAULT_PROCESS_NOISE: f64 = 0.0025;
/// (0.1 m)².
pub const DEFAULT_MEASUREMENT_NOISE: f64 = 0.01;
/// (0.5 m)².
pub const DEFAULT_INITIAL_VARIANCE: f64 = 0.25;

/// ξ reported for samples outside the support of the normality model.
pub const OUT_OF_SUPPORT_XI: f64 = f64::MAX;

/// `X_{k+1} = X_k + dt·u + w`, `w ~ N(0, q·I)`; measurements `Z = X + v`,
/// `v ~ N(0, r·I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneDynamics {
    pub zone: ZoneId,
    pub u: Velocity,
    pub dt: f64,
    pub q: f64,
    pub r: f64,
}

impl ZoneDynamics {
    pub fn new(zone: ZoneId, u: Velocity, dt: f64, q: f64, r: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(q >= 0.0 && q.is_finite()) {
            return Err(invalid("q", format!("must be non-negative, got {q}")));
        }
        if !(r > 0.0) {
            return Err(invalid("r", format!("must be positive, got {r}")));
        }
        if !(u.x.is_finite() && u.y.is_finite()) {
            return Err(invalid("u", "must be finite"));
        }
        Ok(Self { zone, u, dt, q, r })
    }

    pub fn with_measurement_noise(self, r: f64) -> Result<Self> {
        Self::new(self.zone, self.u, self.dt, self.q, r)
    }

    pub fn predict_mean(&self, x: &Point) -> Point {
        x + self.u * self.dt
    }

    pub fn process_covariance(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.q
    }

    pub fn measurement_covariance(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// ξ above this is abnormal, meters.
    pub xi_threshold: f64,
    /// Initial estimate variance P₀ = p0·I.
    pub initial_variance: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            xi_threshold: 0.4,
            initial_variance: DEFAULT_INITIAL_VARIANCE,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi_threshold > 0.0) {
            return Err(invalid("xi_threshold", format!("must be positive, got {}", self.xi_threshold)));
        }
        if !(self.initial_variance > 0.0) {
            return Err(invalid("initial_variance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState {
    pub x: Point,
    pub p: Matrix2<f64>,
    pub zone: Option<ZoneId>,
}

impl KfState {
    pub fn new(x: Point, p: Matrix2<f64>, zone: Option<ZoneId>) -> Self {
        Self { x, p, zone }
    }
}

/// One scored sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationRecord {
    pub k: u64,
    pub t: f64,
    /// Active zone; `None` when out of support.
    pub zone: Option<ZoneId>,
    /// ε = Z − X̂_{k|k−1}
    pub eps: Point,
    /// ‖ε‖₂, or [`OUT_OF_SUPPORT_XI`].
    pub xi: f64,
    pub abnormal: bool,
    pub out_of_support: bool,
}

/// Time update: `x ← x + dt·u`, `P ← P + Q`.
pub fn predict(state: &KfState, dynamics: &ZoneDynamics) -> Result<KfState> {
    if state.zone != Some(dynamics.zone) {
        return Err(Error::ZoneMismatch {
            state: state.zone,
            dynamics: dynamics.zone,
        });
    }
    Ok(KfState {
        x: dynamics.predict_mean(&state.x),
        p: state.p + dynamics.process_covariance(),
        zone: state.zone,
    })
}

/// Measurement update with `H = I`. `state` is the predicted state; the
/// record carries the innovation against it.
pub fn update(
    state: &KfState,
    z: &Point,
    dynamics: &ZoneDynamics,
    detector: &DetectorConfig,
    k: u64,
    t: f64,
) -> Result<(KfState, InnovationRecord)> {
    if !(z.x.is_finite() && z.y.is_finite()) {
        return Err(Error::NonFiniteMeasurement { k });
    }
    if state.zone != Some(dynamics.zone) {
        return Err(Error::ZoneMismatch {
            state: state.zone,
            dynamics: dynamics.zone,
        });
    }
    let eps = z - state.x;
    let xi = (eps.x * eps.x + eps.y * eps.y).sqrt();

    let r = dynamics.measurement_covariance();
    let s = state.p + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| invalid("innovation covariance", "singular"))?;
    let gain = state.p * s_inv;
    let i_k = Matrix2::identity() - gain;
    // Joseph form keeps P symmetric positive semidefinite.
    let p = i_k * state.p * i_k.transpose() + gain * r * gain.transpose();
    let p = (p + p.transpose()) * 0.5;

    let next = KfState {
        x: state.x + gain * eps,
        p,
        zone: state.zone,
    };
    let record = InnovationRecord {
        k,
        t,
        zone: state.zone,
        eps,
        xi,
        abnormal: xi > detector.xi_threshold,
        out_of_support: false,
    };
    Ok((next, record))
}

/// Scores every sample after the first against the filter of the zone the
/// sample falls in.
///
/// On a zone change the estimate and its covariance carry over unchanged to
/// the new zone's filter. Samples outside any zone are abnormal with
/// ξ = [`OUT_OF_SUPPORT_XI`]; the filter restarts from such a measurement
/// with the initial covariance.
pub fn run_bank(
    traj: &Trajectory,
    zones: &ZoneMap,
    grid: &SpatialGrid,
    dynamics: &[ZoneDynamics],
    detector: &DetectorConfig,
) -> Result<Vec<InnovationRecord>> {
    detector.validate()?;
    let samples = traj.samples();
    if samples.is_empty() || samples.iter().all(|s| grid.locate_cell(&s.pos).is_none()) {
        return Err(Error::OutsideGrid);
    }
    let dyn_of = |id: ZoneId| -> Result<&ZoneDynamics> {
        dynamics
            .iter()
            .find(|d| d.zone == id)
            .ok_or_else(|| invalid("dynamics", format!("no dynamics for zone {id}")))
    };
    let p0 = Matrix2::identity() * detector.initial_variance;
    let zone_at = |p: &Point| grid.locate_cell(p).and_then(|m| zones.zone_of_cell(m));

    let first = &samples[0];
    let mut state = KfState::new(first.pos, p0, zone_at(&first.pos));
    let mut records = Vec::with_capacity(samples.len().saturating_sub(1));

    for s in &samples[1..] {
        if !(s.pos.x.is_finite() && s.pos.y.is_finite()) {
            return Err(Error::NonFiniteMeasurement { k: s.k });
        }
        match zone_at(&s.pos) {
            Some(id) => {
                let d = dyn_of(id)?;
                state.zone = Some(id);
                let predicted = predict(&state, d)?;
                let (next, rec) = update(&predicted, &s.pos, d, detector, s.k, s.t)?;
                state = next;
                records.push(rec);
            }
            None => {
                records.push(InnovationRecord {
                    k: s.k,
                    t: s.t,
                    zone: None,
                    eps: s.pos - state.x,
                    xi: OUT_OF_SUPPORT_XI,
                    abnormal: true,
                    out_of_support: true,
                });
                state = KfState::new(s.pos, p0, None);
            }
        }
    }
    Ok(records)
}

/// Maximal runs of consecutive abnormal records, as `(first, last)` record
/// positions (inclusive).
pub fn abnormal_runs(records: &[InnovationRecord]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, r) in records.iter().enumerate() {
        match (r.abnormal, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, records.len() - 1));
    }
    runs
}
