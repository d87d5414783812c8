use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A single integration step rotated by half a turn or more. Usually a
    /// sensor dropout or a wrong sampling period.
    #[error("incremental rotation of {angle} rad is too large for one step")]
    StepTooLarge { angle: f64 },

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("recall is undefined: ground truth contains no stationary samples")]
    UndefinedRecall,

    #[error("threshold optimization failed: F-beta is zero for every threshold in the grid")]
    OptimizationFailed,

    #[error("training failed: {0}")]
    TrainingFailed(String),

    #[error("point set is rank deficient (collinear or coincident points)")]
    RankDeficient,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
