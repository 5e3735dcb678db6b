use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("degenerate cell {cell}: signed area {area:e}")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("duplicate cell {cell} (same vertices as cell {other})")]
    DuplicateCell { cell: usize, other: usize },

    #[error("boundary face ({0}, {1}) carries no tag")]
    UntaggedBoundaryFace(usize, usize),

    #[error("mesh file line {line}: {message}")]
    MeshFormat { line: usize, message: String },

    #[error("invalid polynomial degree {0} (must be >= 1)")]
    InvalidDegree(usize),

    #[error("function spaces are incompatible: {0}")]
    IncompatibleSpaces(String),

    #[error("non-finite value {value} at node ({x}, {y})")]
    NonFiniteField { x: f64, y: f64, value: f64 },

    #[error("non-positive normal diffusivity {0:e}")]
    NonPositiveDiffusivity(f64),

    #[error("non-finite nonlinear residual")]
    NonFiniteResidual,

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error(
        "solve did not reach the required accuracy: relative residual {residual:e} > {tolerance:e}"
    )]
    Accuracy { residual: f64, tolerance: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (last increment {increment:e})")]
    NewtonMaxIterations { iterations: usize, increment: f64 },

    #[error("Newton line search stalled at iteration {iteration}")]
    NewtonStalled { iteration: usize },

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("marking fraction {0} outside (0, 1]")]
    MarkingFraction(f64),

    #[error("unknown benchmark '{0}'")]
    UnknownBenchmark(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::AtLevel {
            level,
            source: Box::new(self),
        }
    }

    /// Strips level context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            other => other,
        }
    }
}
