use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Load,
    Field,
    Encode,
    Segment,
    Dynamics,
    Persist,
    Detect,
    Fuse,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Simulate => "simulate",
            Stage::Load => "load",
            Stage::Field => "field",
            Stage::Encode => "encode",
            Stage::Segment => "segment",
            Stage::Dynamics => "dynamics",
            Stage::Persist => "persist",
            Stage::Detect => "detect",
            Stage::Fuse => "fuse",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),

    #[error("[{stage}] {source}")]
    Core {
        stage: Stage,
        #[source]
        source: motionaware_core::Error,
    },

    #[error("[{stage}] {message}")]
    Data { stage: Stage, message: String },

    #[error("[{stage}] {}: {source}", path.display())]
    Io {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "model format version {found} is not supported (this build reads version {expected}); \
         retrain the model to migrate it"
    )]
    ModelVersion { found: u64, expected: u64 },
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 model version.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Core { .. } | PipelineError::Data { .. } | PipelineError::Io { .. } => 3,
            PipelineError::ModelVersion { .. } => 4,
        }
    }

    pub(crate) fn data(stage: Stage, message: impl Into<String>) -> Self {
        PipelineError::Data {
            stage,
            message: message.into(),
        }
    }

    pub(crate) fn io(stage: Stage, path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            stage,
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Tags core errors with the stage they occurred in.
pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> AtStage<T> for std::result::Result<T, motionaware_core::Error> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|source| PipelineError::Core { stage, source })
    }
}

impl<T> AtStage<T> for std::result::Result<T, csv::Error> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| PipelineError::data(stage, e.to_string()))
    }
}

impl<T> AtStage<T> for std::result::Result<T, serde_json::Error> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| PipelineError::data(stage, e.to_string()))
    }
}
