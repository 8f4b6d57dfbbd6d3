use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("lambda = {lambda} lies within {distance:e} of the kernel pole -{pole}")]
    PoleProximity {
        lambda: Complex64,
        pole: f64,
        distance: f64,
    },

    #[error("bisection failed to converge on bracket [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("mode {mode}: characteristic roots not simple (separation {separation:e})")]
    DegenerateRoots { mode: usize, separation: f64 },

    #[error("mode {mode}: singular moment system (pivot {pivot:e}, condition estimate {condition:e})")]
    SingularSystem {
        mode: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("t = {t} outside control horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("x = {x} outside the spatial domain [0, π]")]
    OutOfDomain { x: f64 },

    #[error("invalid step size: {0}")]
    StepSizeInvalid(String),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("smoothness violation: beta = {beta} must exceed dimension/2 = {half_dim}")]
    SmoothnessViolation { beta: f64, half_dim: f64 },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("pointwise evaluation unsupported for user-supplied spectra")]
    UnsupportedBasis,

    #[error("horizon exceeded 2^20 without meeting bound {bound} (last probe T = {last_t}, bound {last_bound:e})")]
    HorizonOverflow {
        bound: f64,
        last_t: f64,
        last_bound: f64,
        transcript: Vec<(f64, f64)>,
    },

    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidKernel(_)
            | Error::InvalidBasis(_)
            | Error::SmoothnessViolation { .. }
            | Error::UnsupportedBasis
            | Error::OutOfDomain { .. }
            | Error::OutOfHorizon { .. }
            | Error::ParameterMismatch(_)
            | Error::StepSizeInvalid(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
