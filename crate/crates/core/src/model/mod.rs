//! Domain types shared by every stage of the pipeline: trajectories, the
//! spatial grid, the learned velocity field and its zone partition.

mod field;
mod grid;
mod trajectory;
pub(crate) mod zone;

pub use field::VelocityField;
pub use grid::{Rect, SpatialGrid};
pub use trajectory::{derive_velocities, Sample, Trajectory};
pub use zone::{Zone, ZoneGroup, ZoneId, ZoneMap};

/// A point or displacement in the plane, in meters.
pub type Point = nalgebra::Vector2<f64>;

/// A planar velocity, in m/s.
pub type Velocity = nalgebra::Vector2<f64>;
