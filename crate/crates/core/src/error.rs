use thiserror::Error;

/// Errors produced across the calibration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter vector must have {expected} entries, got {got}")]
    WrongArity { expected: usize, got: usize },

    /// 1-based parameter index.
    #[error("parameter {0} is outside its admissible interval")]
    OutOfRange(usize),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("series has no infected mass; its CDF is undefined")]
    AllZeroSeries,

    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("no critical-value coefficient tabulated for alpha = {0}")]
    UnsupportedAlpha(f64),

    #[error("sobol dimension {0} is not supported (1..={max})", max = crate::sobol::MAX_DIMENSION)]
    UnsupportedDimension(usize),

    #[error("sobol generator exhausted its 32-bit index space")]
    IndexOverflow,

    #[error("bad range: {0}")]
    BadRange(String),

    #[error("pool holds {available} vectors, cannot draw {requested}")]
    PoolExhausted { available: usize, requested: usize },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("split ratio must lie in (0,1), got {0}")]
    InvalidRatio(f64),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("ground-truth database is empty")]
    EmptyDb,

    #[error("duplicate parameter vector in ground-truth database")]
    DuplicateVector,

    #[error("batch index {got} precedes last index {last}")]
    BatchOrder { last: u64, got: u64 },

    #[error("invalid calibration config: {0}")]
    ConfigInvalid(String),

    #[error("schema error on line {line}: {message}")]
    SchemaError { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
