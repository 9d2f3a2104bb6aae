use std::fmt;

/// Errors produced by training, inference and the file loaders.
#[derive(Debug, thiserror::Error)]
pub enum EcrmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("not an arborescence: {0}")]
    NotArborescence(String),

    #[error("cycle detected: {0}")]
    Cycle(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("enumeration cap of {cap} outputs exceeded")]
    CapExceeded { cap: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{0}")]
    Parse(ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EcrmError {
    /// True for failures of the numerical kernels rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, EcrmError::Factorization(_) | EcrmError::Singular(_))
    }

    pub(crate) fn parse(source: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        EcrmError::Parse(ParseError {
            source: source.into(),
            line,
            message: message.into(),
        })
    }
}

/// A parse failure positioned at a 1-based line of a named input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub source: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.source, self.line, self.message)
    }
}

pub type Result<T, E = EcrmError> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(EcrmError::DimensionMismatch { expected, found })
    }
}
