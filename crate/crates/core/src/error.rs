use thiserror::Error;

/// Errors raised by the law, the calibration routines, the dataset loader and
/// the planners.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("logarithm of non-positive value in `{term}` term ({value})")]
    NegativeLog { term: &'static str, value: f64 },

    #[error("MMLU-Pro mapping is only defined for MMLU > 70 (got {0})")]
    OutOfScope(f64),

    #[error("at least {required} samples are required, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("regression weights sum to {0}; gamma inference needs a positive sum")]
    UnsupportedWeights(f64),

    #[error("no architecture satisfies the search constraints")]
    NoSolution,

    #[error("dataset line {line}: field `{field}`: {message}")]
    Parse {
        line: u64,
        field: String,
        message: String,
    },

    #[error("dataset schema: {0}")]
    Schema(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl LawError {
    /// Stable machine-readable code, shared with the HTTP service.
    pub fn code(&self) -> &'static str {
        match self {
            LawError::InvalidInput(_) => "INVALID_INPUT",
            LawError::NegativeLog { .. } => "DOMAIN_NEGATIVE_LOG",
            LawError::OutOfScope(_) => "OUT_OF_SCOPE",
            LawError::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            LawError::RankDeficient { .. } => "RANK_DEFICIENT",
            LawError::UnsupportedWeights(_) => "UNSUPPORTED_WEIGHTS",
            LawError::NoSolution => "NO_SOLUTION",
            LawError::Parse { .. } => "PARSE_ERROR",
            LawError::Schema(_) => "SCHEMA_ERROR",
            LawError::Io(_) => "IO_ERROR",
        }
    }
}

impl From<std::io::Error> for LawError {
    fn from(e: std::io::Error) -> Self {
        LawError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LawError>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(LawError::InvalidInput(msg()))
    }
}
