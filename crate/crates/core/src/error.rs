use thiserror::Error;

/// Broad error class, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input.
    Input,
    /// Well-formed input outside an operation's domain (e.g. conditioning on
    /// a zero-mass event).
    Domain,
    /// A state-space cap would be exceeded.
    Resource,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("variable groups overlap on `{0}`")]
    OverlappingGroups(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid probability mass: {0}")]
    InvalidMass(String),

    #[error("{what} sums to {sum}, expected 1")]
    NotNormalized { what: String, sum: f64 },

    #[error("conditioning event has zero probability")]
    ZeroMass,

    #[error("state space of {needed} entries exceeds cap of {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("unknown rate symbol `{0}`")]
    UnknownRate(String),

    #[error("cannot evaluate `{0}`")]
    Unevaluable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ZeroMass => ErrorKind::Domain,
            Error::CapExceeded { .. } => ErrorKind::Resource,
            _ => ErrorKind::Input,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
