use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("kinetically forbidden: {0}")]
    Forbidden(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: [f64; 4] },
    #[error("energy drift {drift:.3e} exceeds budget {budget:.1e}")]
    EnergyDrift { drift: f64, budget: f64 },
    #[error("integration budget exhausted: {0}")]
    Budget(String),
    #[error("outside integration box: {0}")]
    OutOfBox(String),
    #[error("unsuitable orbit: {0}")]
    Orbit(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
