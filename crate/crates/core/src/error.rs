use thiserror::Error;

/// Errors raised by the library.
///
/// Solver outcomes such as `MAX_ITER` or an unbounded relaxation are not
/// errors; they are reported through the status fields of the result types.
#[derive(Debug, Error)]
pub enum QpError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Q is not symmetric: Q[{row}][{col}] = {upper} but Q[{col}][{row}] = {lower}")]
    AsymmetricQ {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("component {index} is negative ({value:e}) beyond tolerance")]
    NegativeComponent { index: usize, value: f64 },

    #[error("mixture point {index} is not feasible (residual {residual:e})")]
    InfeasibleMixturePoint { index: usize, residual: f64 },

    #[error("mixture ray {index} is not in the recession cone: {reason}")]
    RayNotInRecessionCone { index: usize, reason: String },

    #[error("mixture weights do not form a probability vector: {0}")]
    WeightsNotSimplex(String),

    #[error("point is not feasible for the instance (residual {residual:e})")]
    PointInfeasible { residual: f64 },

    #[error("instance has n = {n} variables, above the enumeration cap of {cap}")]
    DeskScaleLimit { n: usize, cap: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("instance generation failed for seed {seed} after {attempts} attempts: {reason}")]
    GenerationFailed {
        seed: u64,
        attempts: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, QpError>;
