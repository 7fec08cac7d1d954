use thiserror::Error;

/// Errors raised by the discretization, the solvers and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature degree {0} is outside the supported range 0..=30")]
    QuadratureDegree(usize),

    #[error("degenerate element {element}: jacobian determinant {det:e}")]
    DegenerateElement { element: usize, det: f64 },

    #[error("singular local moment system for {what} on element {element}")]
    SingularMoments { what: &'static str, element: usize },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("inverse iteration did not converge in {iterations} steps (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("post-processed eigenfunction has vanishing norm")]
    VanishingNorm,

    #[error("discrete eigenfunction has the wrong sign relative to the exact solution")]
    SignMismatch,

    #[error("mesh parse error on line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
