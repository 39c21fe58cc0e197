//! Zoning of a velocity field: RGB encoding, superpixel partition and the
//! per-zone linear motion model.

mod encode;
mod slic;

pub use encode::{encode_image, ChannelNorm, VelocityImage};
pub use slic::{circular_variance, segment, SlicParams, CURVE_VARIANCE_THRESHOLD};

use crate::error::{invalid, Result};
use crate::kf::{ZoneDynamics, DEFAULT_MEASUREMENT_NOISE};
use crate::model::Zone;

/// Transition model `X_{k+1} = X_k + dt·u + w`, `w ~ N(0, q·I)` for `zone`.
///
/// Measurement noise takes the default `r`; see
/// [`ZoneDynamics::with_measurement_noise`].
pub fn zone_dynamics(zone: &Zone, dt: f64, q: f64) -> Result<ZoneDynamics> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    ZoneDynamics::new(zone.id, zone.u, dt, q, DEFAULT_MEASUREMENT_NOISE)
}
