use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum ColvarError {
    #[error("invalid epsilon grid: {0}")]
    InvalidEpsGrid(String),

    #[error("non-finite sample at epsilon = {eps}: {context}")]
    NonFiniteSample { eps: f64, context: String },

    #[error("epsilon grid mismatch between operands")]
    GridMismatch,

    #[error("spatial grid mismatch between operands at epsilon = {0}")]
    SpatialMismatch(f64),

    #[error("division by exact zero at epsilon = {0}")]
    DivisionByZero(f64),

    #[error("coordinate {x} outside domain [{a}, {b}] at epsilon = {eps}")]
    OutsideDomain { x: f64, a: f64, b: f64, eps: f64 },

    #[error("spatial grid too coarse: {0}")]
    TooCoarse(String),

    #[error("node cap exceeded: would need {needed} nodes (cap {cap}) at epsilon = {eps}")]
    NodeCapExceeded { needed: usize, cap: usize, eps: f64 },

    #[error("epsilon grid too short: {0}")]
    EmptyTail(String),

    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),

    #[error("delta family invariant failed: {0}")]
    DeltaInvariant(String),

    #[error("net is negligible; no fundamental-lemma witness exists")]
    NegligibleNet,

    #[error("first-variation cross-check failed at epsilon = {eps}: |dq - int| = {mismatch:.3e}")]
    VariationCrossCheck { eps: f64, mismatch: f64 },

    #[error("degenerate elliptic coefficient: {0}")]
    Degenerate(String),

    #[error("constitutive law not monotone on the required strain range at epsilon = {0}")]
    NonMonotone(f64),

    #[error("bisection bracket failure: {0}")]
    BracketFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("trajectory left the configured spatial box at epsilon = {eps}, t = {t}")]
    TrajectoryEscaped { eps: f64, t: f64 },

    #[error("CFL violation: {0}")]
    CflViolation(String),

    #[error("solution blow-up detected at epsilon = {eps}, t = {t}")]
    BlowUp { eps: f64, t: f64 },

    #[error("metric not invertible at sample point {0:?}")]
    MetricSingular(Vec<f64>),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ColvarError>;
