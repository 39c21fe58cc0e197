//! Learning the normal motion of an agent from its trajectories and scoring
//! new observations against it.
//!
//! The pipeline: a Gaussian-process velocity field over a spatial grid
//! ([`gp`]), an RGB encoding of that field partitioned into superpixel zones
//! of quasi-constant velocity ([`segment`]), and a bank of per-zone Kalman
//! filters whose innovation norm is the abnormality signal ([`kf`]). The
//! [`sim`] module synthesizes perimeter-patrol scenarios, with and without
//! an obstacle-avoidance detour, plus first-person frames.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gp;
pub mod kf;
pub mod model;
pub mod segment;
pub mod sim;

pub use error::{Error, Result};
pub use gp::{build_field, FieldBuild, GpHyper, GpModel, MaskPolicy};
pub use kf::{DetectorConfig, InnovationRecord, KfState, ZoneDynamics};
pub use model::{
    derive_velocities, Point, Rect, Sample, SpatialGrid, Trajectory, Velocity, VelocityField, Zone,
    ZoneGroup, ZoneId, ZoneMap,
};
pub use segment::{encode_image, segment, zone_dynamics, SlicParams, VelocityImage};
