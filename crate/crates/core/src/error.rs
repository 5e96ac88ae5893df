use thiserror::Error;

/// Library-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("treatment value {value} at row {row} is not 0 or 1")]
    NonBinaryTreatment { row: usize, value: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: String },
    #[error("one treatment arm is empty")]
    EmptyArm,
    #[error("design matrix is rank deficient (pivot {pivot:e} below threshold)")]
    RankDeficient { pivot: f64 },
    #[error("solver did not converge within {max_sweeps} sweeps (last max step {last_step:e})")]
    NoConvergence { max_sweeps: usize, last_step: f64 },
    #[error("perfect separation detected in unpenalized logistic fit")]
    SeparationDetected,
    #[error("too few rows: need at least {need}, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("reference arm for balancing is empty")]
    EmptyReferenceArm,
    #[error("weighted arm sum is zero; cannot form weighted difference")]
    ZeroArmWeight,
    #[error("no units remain in both arms after trimming at alpha={alpha}")]
    EmptyAfterTrim { alpha: f64 },
    #[error("a cross-fitting fold lost a treatment arm after {retries} retries")]
    FoldArmEmpty { retries: usize },
    #[error("{failed} of {total} resampling replicates failed (limit 10%)")]
    TooManyFailedReplicates { failed: usize, total: usize },
    #[error("conditional variance estimates are required but missing")]
    MissingVarianceEstimates,
    #[error("every covariate split failed or was skipped")]
    AllSplitsFailed,
    #[error("file not found: {path}")]
    FileNotFound { path: String },
    #[error("missing column: {name}")]
    MissingColumn { name: String },
    #[error("parse error at row {row}, column {col}: {message}")]
    ParseError {
        row: usize,
        col: String,
        message: String,
    },
    #[error("data file does not match the manifest: {message}")]
    SchemaMismatch { message: String },
    #[error("unknown simulation design: {name}")]
    UnknownDgp { name: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
