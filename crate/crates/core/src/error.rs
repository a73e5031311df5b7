use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("arm index {index} out of range for {arms} arms")]
    ArmIndex { index: usize, arms: usize },

    #[error("infeasible instance: no arm has mean >= threshold {mu_cs}")]
    Infeasible { mu_cs: f64 },

    #[error("round overflow: horizon {horizon} with presumed gap {gap} gives T*gap^2 <= 1")]
    RoundOverflow { horizon: u64, gap: f64 },

    #[error("degenerate horizon {0}: at least 3 steps are required")]
    DegenerateHorizon(u64),

    #[error("degenerate gap for arm {arm}: {reason}")]
    DegenerateGap { arm: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown policy id `{0}`")]
    UnknownPolicy(String),

    #[error("run {run_id} (seed {seed}): {source}")]
    Run {
        run_id: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep point {axis}={value}: {source}")]
    SweepPoint {
        axis: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
