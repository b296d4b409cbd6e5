use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("mesh would need {needed} nodes, budget is {budget}")]
    Resource { needed: usize, budget: usize },

    #[error("degenerate cell {cell} (signed area {area:e})")]
    Geometry { cell: usize, area: f64 },

    #[error("non-finite value {value} at ({x}, {y})")]
    Evaluation { x: f64, y: f64, value: f64 },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("quadrature did not reach tolerance {tol:e} (last difference {diff:e})")]
    Quadrature { tol: f64, diff: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("modular is infinite for every tested scale")]
    Unbounded,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("proved bound violated: {0}")]
    BoundViolation(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
