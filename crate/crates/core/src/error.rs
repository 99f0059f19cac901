use crate::cantor::TriadicIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid triadic index: generation {k}, position {j}")]
    InvalidIndex { k: u32, j: u64 },

    #[error("the generation-0 interval has no sibling")]
    NoSibling,

    #[error("{what} = {requested} exceeds the supported limit {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("evaluation point {x} coincides with an atom at {position}")]
    Singularity { x: f64, position: f64 },

    #[error("evaluation point {x} is within {slack:e} of mass at {position}; refine the quadrature or move the point")]
    TooClose { x: f64, position: f64, slack: f64 },

    #[error("zero table has no entry for gap {0}")]
    MissingZero(TriadicIndex),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure comes from a computation rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singularity { .. } | Error::TooClose { .. } | Error::NumericalFailure(_) | Error::DegenerateFit(_)
        )
    }
}
