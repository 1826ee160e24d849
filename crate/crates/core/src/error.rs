use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("point {t} lies outside the domain [{a}, {b}]")]
    OutsideDomain { t: f64, a: f64, b: f64 },

    #[error("malformed piecewise polynomial: {0}")]
    Malformed(String),

    #[error("domains differ: [{0}, {1}] vs [{2}, {3}]")]
    DomainMismatch(f64, f64, f64, f64),

    #[error("piece degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("integration bounds out of order: c = {c} > d = {d}")]
    ReversedBounds { c: f64, d: f64 },

    #[error("exponent must lie in [1, inf], got {0}")]
    InvalidExponent(f64),

    #[error("weight w_{index} is not strictly positive: w({at}) = {value}")]
    NonPositiveWeight { index: usize, at: f64, value: f64 },

    #[error("weight system has {available} weights but order {requested} was requested")]
    TooFewWeights { available: usize, requested: usize },

    #[error("order n = {0} is even: the balancing condition cannot hold for any even n")]
    EvenOrder(usize),

    #[error("order n must be at least 1")]
    ZeroOrder,

    #[error("weight function p takes the negative value {value} at {at}")]
    NegativeDensity { at: f64, value: f64 },

    #[error("weight function p has nonpositive total mass {0}")]
    NoMass(f64),

    #[error("node {x} violates the balancing condition (integral of the kernel = {residual})")]
    Unbalanced { x: f64, residual: f64 },

    #[error("invalid modulus of continuity: {0}")]
    InvalidModulus(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument `{key}`: {reason}")]
    InvalidArgument { key: &'static str, reason: String },
}

impl Error {
    pub(crate) fn arg(key: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { key, reason: reason.into() }
    }
}
