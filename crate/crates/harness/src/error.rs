use std::path::PathBuf;

use piezowave_core::blowup::BlowupError;
use piezowave_core::decay::DecayError;
use piezowave_core::grid::GridError;
use piezowave_core::integrator::StepError;
use piezowave_core::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: String, message: String },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Decay(#[from] DecayError),
    #[error(transparent)]
    Blowup(#[from] BlowupError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::IoFailure {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
