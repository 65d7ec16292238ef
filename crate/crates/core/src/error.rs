use thiserror::Error;

/// Errors raised by the geometry, quadrature and flow layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("convexity violated at node {node}: principal radius {radius:e}")]
    ConvexityViolation { node: usize, radius: f64 },

    #[error("support value at node {node} is not positive ({value:e})")]
    NonPositiveSupport { node: usize, value: f64 },

    #[error("polar angles of boundary points are not cyclically monotone near node {node}")]
    InterpolationError { node: usize },

    #[error("point ({x}, {y}) lies outside the body by {margin:e}")]
    PointOutsideBody { x: f64, y: f64, margin: f64 },

    #[error("body has numerically zero extent")]
    QuadratureUnderflow,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("exponent q = {q} is not supported here: {reason}")]
    UnsupportedExponent { q: f64, reason: &'static str },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate normalization denominator {0:e}")]
    DegenerateDenominator(f64),

    #[error("step size fell below dt_min = {dt_min:e} at t = {t}")]
    StepSizeUnderflow { t: f64, dt_min: f64 },

    #[error("flow did not become stationary within {max_steps} steps")]
    NonConvergence { max_steps: usize },

    #[error("perturbed body at t = {t} is not convex: {source}")]
    PerturbedNotConvex { t: f64, source: Box<Error> },

    #[error("array length {got} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
