use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParameters(String),

    #[error("mesh invariant violated: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {element} (measure {measure:e})")]
    DegenerateElement { element: usize, measure: f64 },

    #[error("invalid field specification: {0}")]
    InvalidField(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(#[from] HypothesisViolation),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cholesky factorisation of {0} failed (matrix not positive definite)")]
    Factorization(&'static str),

    #[error("eigensolver did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("zero vector has no Rayleigh quotient")]
    ZeroVector,

    #[error("not a discrete Laplacian datum: interior residual {0:e}")]
    NotLaplacianDatum(f64),

    #[error("requested {requested} eigenpairs but only {available} are available")]
    TooManyEigenpairs { requested: usize, available: usize },

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("invalid initial datum: {0}")]
    InvalidInitialDatum(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(
        "ambiguous kernel classification: lambda_1 = {lambda1:e} is inside the zero band \
         but the first eigenvector spread is {spread:e}"
    )]
    AmbiguousKernel { lambda1: f64, spread: f64 },

    #[error("found {found} of {requested} roots below lambda_max = {lambda_max}")]
    TooFewRoots {
        found: usize,
        requested: usize,
        lambda_max: f64,
    },

    #[error("invalid oracle parameters: {0}")]
    InvalidOracle(String),

    #[error("gamma sweep rung {rung} (g = {g}): {source}")]
    Rung {
        rung: usize,
        g: f64,
        #[source]
        source: Box<Error>,
    },
}

/// First point at which a coefficient drops below the ellipticity floor.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{field} = {value} < eta = {eta} at {location} point ({x}, {y})")]
pub struct HypothesisViolation {
    pub field: &'static str,
    pub location: &'static str,
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub eta: f64,
}
