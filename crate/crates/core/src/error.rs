use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// parameter/usage problems, data problems, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no data left after removing missing rows")]
    EmptyData,

    #[error("degenerate variance: series `{0}` is constant")]
    DegenerateVariance(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("rank-deficient design matrix (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("order of integration undetermined: no difference order <= {max_order} is stationary")]
    OrderUndetermined { max_order: usize },

    #[error("collinear channels: {0} moment matrix is singular")]
    Collinear(&'static str),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("hyperparameter optimisation failed: {0}")]
    OptimizationFailure(String),

    #[error("simplex count {count} exceeds the configured cap of {cap}")]
    SizeLimit { count: usize, cap: usize },

    #[error("oracle input too large: {size} intervals (max {max})")]
    OracleSize { size: usize, max: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) => ErrorKind::Usage,
            Error::RankDeficient { .. }
            | Error::OrderUndetermined { .. }
            | Error::Collinear(_)
            | Error::OptimizationFailure(_)
            | Error::SizeLimit { .. } => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
