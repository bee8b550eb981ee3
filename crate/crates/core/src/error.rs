use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singularity: r = {r:e} at t = {t}")]
    Collision { t: f64, r: f64 },
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("no section crossing within the time horizon ({0})")]
    NoCrossing(f64),
    #[error("tangential section crossing at t = {0}")]
    Tangency(f64),
    #[error("differential correction failed: {0}")]
    Correction(String),
    #[error("orbit family: {0}")]
    Family(String),
    #[error("energy {h} outside the family range [{lo}, {hi}]")]
    Range { h: f64, lo: f64, hi: f64 },
    #[error("manifold seeding: {0}")]
    Seeding(String),
    #[error("empty section cut")]
    EmptyCut,
    #[error("connection: {0}")]
    Connection(String),
    #[error("foot-point did not converge: {0}")]
    Footpoint(String),
    #[error("channel continuation: {0}")]
    Continuation(String),
    #[error("integrand did not decay: {0}")]
    Decay(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
