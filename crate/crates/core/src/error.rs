use thiserror::Error;

/// Errors raised anywhere in the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("face id {0} out of range")]
    InvalidFace(usize),

    #[error("element id {0} out of range")]
    InvalidElement(usize),

    #[error("degenerate element {element}: area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("no quadrature rule with exactness {requested} (maximum {max})")]
    QuadratureUnavailable { requested: usize, max: usize },

    #[error("polynomial degree {0} not supported")]
    UnsupportedDegree(usize),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("operation requires a scalar field")]
    NotScalar,

    #[error("kernel evaluated at negative time {0}")]
    NegativeTime(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("incompatible right-hand side: constant component {component:e} exceeds {limit:e}")]
    IncompatibleRhs { component: f64, limit: f64 },

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<Error> },

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse category used by the command line driver to choose an exit code.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Constraint(_) => ErrorCategory::Config,
            Error::Assertion(_) => ErrorCategory::Assertion,
            Error::Step { source, .. } => source.category(),
            _ => ErrorCategory::Solver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Solver,
    Assertion,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::Solver => 2,
            ErrorCategory::Assertion => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Solver => "solver",
            ErrorCategory::Assertion => "study-assertion",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
