use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Column `0` of the centered design is (numerically) a combination of earlier columns.
    #[error("design matrix is rank deficient at column {0}")]
    RankDeficient(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    /// Fewer than two slices remain after merging tied responses.
    #[error("response has too little variation to form {0} usable slice(s)")]
    DegenerateSlices(usize),
    #[error("no valid split: all projected values are identical")]
    NoValidSplit,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("no tree has out-of-bag samples")]
    NoOobSamples,
    #[error("kernel support too small at query point: {support} sample(s) with positive weight, need {needed}")]
    DegenerateKernel { support: usize, needed: usize },
    #[error("unknown simulation '{0}'")]
    UnknownSimulation(String),
    #[error("zero vector")]
    ZeroVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("response has zero variance")]
    ZeroVariance,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("target column '{0}' not found in header")]
    MissingTarget(String),
    #[error("non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("column '{0}' is constant and cannot be standardized")]
    ConstantColumn(String),
    #[error("unsupported model format version {found} (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
