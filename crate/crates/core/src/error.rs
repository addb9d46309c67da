use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the library.
///
/// The variants are grouped the way the command-line front end maps them to
/// exit codes: domain and resonance problems are caller errors, numerical
/// failures are internal.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no resonance: {0}")]
    NoResonance(String),
    #[error("resonance mismatch: {0}")]
    ResonanceMismatch(String),
    #[error("not on a resonant torus: {0}")]
    NotResonant(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownSystem(String),
    #[error("incompatible orbit family: {0}")]
    IncompatibleFamily(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("homoclinic tail bound not achievable: {0}")]
    TailBound(String),
}

impl Error {
    /// True for errors caused by the caller's inputs rather than by the
    /// numerics (domain violations, missing resonances, bad parameters).
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Integration { .. })
    }
}
