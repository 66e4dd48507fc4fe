use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("bit string has length {got}, composition encodes exactly {expected} bits")]
    InputLength { expected: usize, got: usize },

    #[error("block does not match composition: {0}")]
    InvalidBlock(String),

    #[error("block rank is not encodable with {bits} bits")]
    RankOutOfRange { bits: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("sequence of length {len} is too short, need at least {needed}")]
    InsufficientLength { len: usize, needed: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidAlphabet(_) => "invalid_alphabet",
            Error::InputLength { .. } => "input_length",
            Error::InvalidBlock(_) => "invalid_block",
            Error::RankOutOfRange { .. } => "rank_out_of_range",
            Error::EmptyInput => "empty_input",
            Error::InsufficientLength { .. } => "insufficient_length",
            Error::Degenerate(_) => "degenerate_input",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Config(_) => "configuration",
            Error::NumericOverflow(_) => "numeric_overflow",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Validation { .. } => "validation",
            Error::UnknownKey(_) => "unknown_key",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Whether this error stems from user-supplied configuration rather than
    /// a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::UnknownKey(_)
                | Error::Parse(_)
                | Error::InvalidAlphabet(_)
        )
    }
}
