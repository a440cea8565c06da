use thiserror::Error;

/// Errors raised by the numerical routines and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("separation undefined: need at least 2 points, got {0}")]
    SeparationUndefined(usize),

    #[error("empty ball: measure of B({center:?}, {radius}) is zero")]
    EmptyBall { center: Vec<f64>, radius: f64 },

    #[error("weight not integrable on ball: weight is {value} at {at:?}")]
    WeightNotIntegrable { at: Vec<f64>, value: f64 },

    #[error("non-finite integrand value {value} at node {node:?}")]
    NonFiniteIntegrand { node: Vec<f64>, value: f64 },

    #[error("truncation radius {truncation} is smaller than ball radius {radius}")]
    TruncationTooSmall { truncation: f64, radius: f64 },

    #[error("tail model not integrable in dimension {dim}: {detail}")]
    TailNotIntegrable { dim: usize, detail: String },

    #[error("kernel degenerate at point {0:?}")]
    DegenerateKernel(Vec<f64>),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("degenerate frame: all vectors vanish")]
    DegenerateFrame,

    #[error("numerically rank-deficient: eigenvalue {eigenvalue:e} is within the ambiguity band around the cutoff {cutoff:e}")]
    RankDeficient { eigenvalue: f64, cutoff: f64 },

    #[error("eigensolver did not converge after {0} sweeps")]
    NotConverged(usize),

    #[error("reference measure vanishes on a ball: B({center:?}, {radius})")]
    ReferenceVanishes { center: Vec<f64>, radius: f64 },

    #[error("general duals unsupported: localization requires a self-dual pair")]
    GeneralDualsUnsupported,

    #[error("degenerate test function: denominator {denominator:e} vs numerator {numerator:e}")]
    DegenerateTestFunction { numerator: f64, denominator: f64 },

    #[error("point set not separated: points {first:?} and {second:?} are {distance} apart")]
    NotSeparated {
        first: Vec<f64>,
        second: Vec<f64>,
        distance: f64,
    },

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
