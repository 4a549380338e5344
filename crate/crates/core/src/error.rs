use thiserror::Error;

/// Failure modes shared by every module of the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite evaluation of {what} at {at}")]
    Evaluation { what: String, at: f64 },
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: String, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("fit failure: {0}")]
    Fit(String),
    #[error("order m = {0} is not supported here")]
    UnsupportedOrder(u32),
    #[error("Lyapunov functional increased at step {step}: {before} -> {after}")]
    Instability { step: usize, before: f64, after: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("step size collapsed at tau = {tau}")]
    Stiffness { tau: f64 },
    #[error("no irregularity certificate after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("solution blew up (sup |w| = {sup}) at tau = {tau}")]
    Blowup { tau: f64, sup: f64 },
    #[error("implicit step failed at tau = {tau}: {reason}")]
    StepFailure { tau: f64, reason: String },
    #[error("boundary layer under-resolved: {0}")]
    Resolution(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
