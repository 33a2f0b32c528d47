use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node ({i},{j}) is not interior (class {class})")]
    NotInterior { i: usize, j: usize, class: &'static str },

    #[error("radius {r} outside the interpolation range [{min}, {max}]")]
    RadiusOutOfRange { r: f64, min: f64, max: f64 },

    #[error("point ({0}, {1}) outside the interpolation range")]
    PointOutOfRange(f64, f64),

    #[error("boundary data attains negative value {0}")]
    NegativeBoundaryData(f64),

    #[error("trace has negative sample {value} at theta = {theta}")]
    NegativeTrace { theta: f64, value: f64 },

    #[error("operation not defined for family {0}")]
    UnsupportedFamily(&'static str),

    #[error("invalid catalog parameters: {0}")]
    InvalidParameters(String),

    #[error("solver did not converge: residual {residual} after {iterations} sweeps")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("active set oscillating after {iterations} sweeps (residual {residual})")]
    OscillatingActiveSet { residual: f64, iterations: usize },

    #[error("positive set is empty")]
    EmptyPositiveSet,

    #[error("positive set touches the outer circle everywhere; no interior free boundary")]
    NoInteriorFreeBoundary,

    #[error("slice x1 = {x1} crosses the free boundary {count} times; expected exactly one")]
    MultipleCrossings { x1: f64, count: usize },

    #[error("slice x1 = {x1} has no free-boundary crossing")]
    NoCrossing { x1: f64 },

    #[error("origin is not a free boundary point: {0}")]
    NotFreeBoundaryPoint(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown claim id `{0}`")]
    UnknownClaim(String),

    #[error("tolerance failure: {0}")]
    ToleranceFailure(String),

    #[error("malformed field file: {0}")]
    FieldFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
