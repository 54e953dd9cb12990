use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("modal resonance at mode n={n}, layer {layer} (cavity {cavity})")]
    ModalResonance { cavity: usize, n: usize, layer: usize },

    #[error("connection resonance at mode n={n} (cavity {cavity})")]
    ConnectionResonance { cavity: usize, n: usize },

    #[error("order too high: k={0} exceeds 40")]
    OrderTooHigh(usize),

    #[error("system singular at pivot {0}")]
    SingularSystem(usize),

    #[error("unsupported polarization: {0}")]
    UnsupportedPolarization(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    Schema { expected: u32, found: u32 },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("oracle did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField { field: field.into(), reason: reason.into() }
    }

    /// Attach a cavity index to modal errors raised with a placeholder.
    pub(crate) fn in_cavity(self, k: usize) -> Self {
        match self {
            Error::ModalResonance { n, layer, .. } => Error::ModalResonance { cavity: k, n, layer },
            Error::ConnectionResonance { n, .. } => Error::ConnectionResonance { cavity: k, n },
            e => e,
        }
    }
}
