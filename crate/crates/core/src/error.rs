use thiserror::Error;

/// Errors raised across the optimization, linear-algebra and control layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bundle has no planes")]
    EmptyBundle,

    #[error("plane anchored at a different point than the bundle")]
    AnchorMismatch,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex iteration limit exceeded ({0} pivots)")]
    LpCycling(usize),

    #[error("zero subgradient: the anchor is already critical")]
    ZeroGradient,

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("system is not stable (spectral abscissa {0})")]
    Unstable(f64),

    #[error("ill-posed LFT: I - D_qp * Delta is singular")]
    IllPosed,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dimension {0} too large for exhaustive grid")]
    DimensionTooLarge(usize),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
