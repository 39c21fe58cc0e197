//! Pipeline stages behind the `motionaware` command: simulate patrol data,
//! train a normality model, score test trajectories, fuse with frame-level
//! scores and report.
//!
//! Every stage is a plain function taking a [`PipelineConfig`] and paths, so
//! the binary is a thin argument parser over this library.

pub mod config;
pub mod data;
pub mod detect;
pub mod error;
pub mod fuse;
pub mod model;
pub mod report;
pub mod simulate;
pub mod train;

pub use config::PipelineConfig;
pub use detect::{detect, Scored, TrajectorySummary};
pub use error::{PipelineError, Result, Stage};
pub use fuse::{fuse, FuseSummary, FusedRow};
pub use model::{NormalityModel, FORMAT_VERSION};
pub use report::report;
pub use simulate::{simulate, Simulated};
pub use train::train;
