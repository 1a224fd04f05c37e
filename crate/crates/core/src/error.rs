use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the set where the quantity is defined.
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    /// The envelope w(t, x) would exceed 1: x lies left of x0(t).
    #[error("x = {x} lies left of the envelope plateau edge x0(t) = {x0} at t = {t}")]
    BeyondEnvelope { t: f64, x: f64, x0: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite value in the solution at t = {t}")]
    NonFinite { t: f64 },

    /// Every sample lies below the level: E_lambda is empty on the grid.
    #[error("level {lambda} is not attained on the grid")]
    BelowLevel { lambda: f64 },

    /// The level set reaches the right end of the grid, so its supremum is not resolved.
    #[error("level {lambda} set reaches the right edge of the grid")]
    FrontExitedDomain { lambda: f64 },

    #[error("offset {offset} is not below every sample in the fit window (min x = {min_x})")]
    Offset { offset: f64, min_x: f64 },

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            domain: domain.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
