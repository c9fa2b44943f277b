use thiserror::Error;

/// Errors raised by construction, validation and evaluation routines.
///
/// Every message names the violated invariant so callers (and the CLI) can
/// surface it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension d = {d} out of range: {min} <= d <= {max} required")]
    DimensionOutOfRange { d: usize, min: usize, max: usize },

    #[error("lambda = {0} invalid: a finite exponent >= 1 required")]
    InvalidLambda(f64),

    #[error("theta = {0} invalid: 0 <= theta <= 1 required")]
    InvalidTheta(f64),

    #[error("generator needs at least one atom")]
    EmptyGenerator,

    #[error("generator atom {atom}: probability {p} invalid, must lie in (0, 1]")]
    AtomProbability { atom: usize, p: f64 },

    #[error("generator atom probabilities sum to {0}, must sum to 1 within 1e-12")]
    AtomProbabilitySum(f64),

    #[error("generator atom {atom}: component z[{index}] = {value} invalid, must be finite and >= 0")]
    AtomComponent { atom: usize, index: usize, value: f64 },

    #[error("generator component {index} has mean {mean}, must equal 1 within 1e-12")]
    GeneratorMean { index: usize, mean: f64 },

    #[error("sample count n = {0} invalid: n >= 1 required")]
    InvalidSampleCount(usize),

    #[error("input vector component {index} = {value} is not finite")]
    NonFiniteComponent { index: usize, value: f64 },

    #[error("tail ratio gamma[{index}] = {value} invalid: finite and >= 0 required")]
    InvalidTailRatio { index: usize, value: f64 },

    #[error("tail ratio at the pivot index {kappa} is {value}, must be exactly 1")]
    PivotNotOne { kappa: usize, value: f64 },

    #[error("pivot index kappa = {kappa} out of range for dimension {d}")]
    KappaOutOfRange { kappa: usize, d: usize },

    #[error("index set must not be empty")]
    EmptySubset,

    #[error("index {index} out of range for dimension {d}")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("index {0} appears more than once in the index set")]
    DuplicateIndex(usize),

    #[error("m = {m} out of range: 1 <= m <= {d} required")]
    ThresholdCountOutOfRange { m: usize, d: usize },

    #[error("cluster length k = {k} out of range: 0 <= k <= {max} required")]
    ClusterLengthOutOfRange { k: usize, max: usize },

    #[error("weighted-Pareto alpha = {0} invalid: a finite exponent > 0 required")]
    InvalidAlpha(f64),

    #[error("weight matrix row {row}: entry lambda[{row}][{col}] = {value} invalid, must be finite and >= 0")]
    InvalidWeight { row: usize, col: usize, value: f64 },

    #[error("weight matrix row {row}: sum of lambda^alpha is {sum}, must equal 1 within 1e-12")]
    WeightRowSum { row: usize, sum: f64 },

    #[error("weight matrix row {row} has {got} entries, expected {expected}")]
    WeightRowLength { row: usize, expected: usize, got: usize },

    #[error("scale beta[{index}] = {value} invalid: finite and > 0 required")]
    InvalidScale { index: usize, value: f64 },

    #[error("quantile q = {0} out of range: 0 < q < 1 required")]
    QuantileOutOfRange(f64),

    #[error("quantiles must be strictly increasing")]
    QuantilesNotIncreasing,

    #[error("threshold s = {s} below the model support: s >= {min} required")]
    ThresholdBelowSupport { s: f64, min: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
