use alloc::string::String;

/// Errors produced by the core computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (entry ({row}, {col}) differs from its transpose)")]
    NotSymmetric { row: usize, col: usize },
    #[error("unsupported weight law: {0}")]
    UnsupportedLaw(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("node {node} has zero degree; the normalized Laplacian is undefined")]
    IsolatedNode { node: usize },
    #[error("clustering failed: {0}")]
    Clustering(String),
    #[error("estimated null variance is zero or not finite; the statistic cannot be calibrated")]
    ZeroVariance,
    #[error("infeasible alternative: {0}")]
    InfeasibleAlternative(String),
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Domain(_) => "domain",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::UnsupportedLaw(_) => "unsupported_law",
            Error::InsufficientData(_) => "insufficient_data",
            Error::IsolatedNode { .. } => "isolated_node",
            Error::Clustering(_) => "clustering",
            Error::ZeroVariance => "zero_variance",
            Error::InfeasibleAlternative(_) => "infeasible_alternative",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
