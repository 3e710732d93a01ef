use thiserror::Error;

/// Errors raised by the numerical kernels and the orchestration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative momentum {0}")]
    NegativeMomentum(f64),

    #[error("Legendre argument t = 1 + {delta:e} is too close to the logarithmic singularity")]
    NearSingular { delta: f64 },

    #[error("Legendre argument t = {0} must exceed 1")]
    ArgumentOutOfDomain(f64),

    #[error("Legendre order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: u32, max: u32 },

    #[error("invalid channel (l = {l}, 2s = {twice_s}): {reason}")]
    InvalidChannel { l: u32, twice_s: i8, reason: &'static str },

    #[error("kernel arguments coincide (p' = p = {0})")]
    CoincidentArguments(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("refinement sequence needs at least {required} grids, got {got}")]
    RefinementTooShort { required: usize, got: usize },

    #[error("coupling nu = {nu} is not below the critical value {critical}")]
    Supercritical { nu: f64, critical: f64 },

    #[error("eigenvector has zero norm")]
    ZeroNorm,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
