use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("operator of order alpha = {alpha} is not Hilbert-Schmidt (requires alpha > 1/2)")]
    NotHilbertSchmidt { alpha: f64 },

    #[error("hypergeometric series did not converge for a={a}, b={b}, c={c}, z={z}")]
    HypergeometricDiverged { a: f64, b: f64, c: f64, z: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed partition: {0}")]
    InvalidPartition(String),

    #[error("jump time {0} lies outside [0, 1]")]
    JumpOutOfRange(f64),

    #[error("basis index {index} out of range 1..={n_max}")]
    BasisIndex { index: usize, n_max: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("need at least {required} samples/points, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("nonpositive value where a positive one is required: {name} = {value}")]
    NonPositive { name: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }
}
