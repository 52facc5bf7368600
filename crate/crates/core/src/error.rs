use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown test case id {0} (expected 1..=5)")]
    UnknownTestCase(u32),
    #[error("discretization parameter n = {0} must be a positive even integer")]
    InvalidResolution(usize),
    #[error("degenerate support: points are collinear or fewer than three")]
    DegenerateSupport,
    #[error("divergent integral: unbounded cell does not decay along a recession direction")]
    DivergentIntegral,
    #[error("divergent edge integral: ray does not decay")]
    DivergentEdgeIntegral,
    #[error("weight vector is outside U: cell {0} has empty interior")]
    NotInU(usize),
    #[error("singular system: linear solve stopped at relative residual {residual:e}")]
    SingularSystem { residual: f64 },
    #[error("max iterations exceeded: {iterations} Newton iterations, residual {residual:e}")]
    MaxIterationsExceeded { iterations: usize, residual: f64 },
    #[error("damping failed at Newton iteration {iteration}: no admissible step 2^-i")]
    DampingFailed { iteration: usize },
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
