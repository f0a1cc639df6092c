use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (factorization failed after jitter retry)")]
    NonPositiveDefinite,

    #[error("degenerate correlation matrix: trace(xi^2) = {0:e}")]
    DegenerateCorrelation(f64),

    #[error("eigendecomposition did not converge or eigenvectors are singular")]
    EigenFailure,

    #[error("precoded symbol has zero norm")]
    ZeroVector,

    #[error("enumeration of 2^{bits} candidates exceeds the cap 2^{cap}")]
    SizeOverflow { bits: u32, cap: u32 },

    #[error("interference subspace has dimension {dim} >= T = {t}")]
    RankDeficiency { dim: usize, t: usize },

    #[error("constellation kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("user {user}, iteration {iteration}: {source}")]
    Detector {
        user: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid spec: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, user: usize, iteration: usize) -> Error {
        match self {
            e @ Error::Detector { .. } => e,
            e => Error::Detector {
                user,
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// Short machine-readable tag, used on the CLI error stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveDefinite => "non_positive_definite",
            Error::DegenerateCorrelation(_) => "degenerate_correlation",
            Error::EigenFailure => "eigen_failure",
            Error::ZeroVector => "zero_vector",
            Error::SizeOverflow { .. } => "size_overflow",
            Error::RankDeficiency { .. } => "rank_deficiency",
            Error::KindMismatch { .. } => "kind_mismatch",
            Error::Dimension(_) => "dimension",
            Error::NonFinite(_) => "non_finite",
            Error::Detector { source, .. } => source.kind(),
            Error::Parse { .. } => "parse_error",
            Error::Validation(_) => "validation_error",
            Error::Io(_) => "io_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
