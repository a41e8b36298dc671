use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh invariant violated: {0}")]
    Invariant(String),

    #[error("irregular point: parameter {0} is a breakpoint of the chart")]
    IrregularPoint(f64),

    #[error("parameter {param} outside chart domain [{lo}, {hi}]")]
    OutsideChart { param: f64, lo: f64, hi: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("envelope violation: {0}")]
    EnvelopeViolation(String),

    #[error("inconsistent degrees of freedom: {0}")]
    Consistency(String),

    #[error(
        "linear solver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    Solver { iterations: usize, residual: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("eigensolver breakdown: achieved residual {residual:.3e}")]
    Eigen { residual: f64 },

    #[error("outside theory: {0}")]
    OutsideTheory(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("problem size {n} exceeds the dense limit {limit}")]
    Size { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
