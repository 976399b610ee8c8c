use thiserror::Error;

/// Errors raised by the discretizations and solvers in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate grid: cell ({i}, {j}) has Jacobian {jacobian:e}")]
    DegenerateGrid { i: usize, j: usize, jacobian: f64 },

    #[error("degenerate Jacobian {jacobian:e} at node ({i}, {j})")]
    DegenerateJacobian { i: usize, j: usize, jacobian: f64 },

    #[error("reparameterization map is not strictly increasing near sample {index}")]
    NonMonotoneMap { index: usize },

    #[error("deformation is tangential to the curve at sample {index} (normal component {normal:e})")]
    NonTransversalDeformation { index: usize, normal: f64 },

    #[error("{context}: slice {slice}: {source}")]
    InSlice {
        context: &'static str,
        slice: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid field grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("finite-difference step {step:e} is lost in rounding at value {value:e}")]
    StepTooSmall { step: f64, value: f64 },

    #[error("index {index} is not an interior sample of a curve with {n} samples")]
    NotInterior { index: usize, n: usize },

    #[error("lightlike point at step {step}, site {site} (|ydot^2 - xdot^2| = {gap:e})")]
    LightlikePoint { step: usize, site: usize, gap: f64 },

    #[error("slope elimination failed at sample {index}")]
    EliminationDiverged { index: usize },

    #[error("step {step} rejected: local error estimate {estimate:e} exceeds {tolerance:e}")]
    StepRejected {
        step: usize,
        estimate: f64,
        tolerance: f64,
    },

    #[error("linear solver failed to converge: {0}")]
    LinearSolver(String),

    #[error("exact Gaussian evolution needs p(z) = c0 - m^2 z^2 / 2 with m > 0")]
    NonQuadraticPotential,

    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn in_slice(self, context: &'static str, slice: usize) -> Self {
        Error::InSlice {
            context,
            slice,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
