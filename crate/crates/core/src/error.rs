use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration cap exceeded: {what} needs {needed} tuples, cap is {cap}")]
    Resource {
        what: String,
        needed: u128,
        cap: u64,
    },

    /// Lattice coordinates of an incidence experiment do not fit the 128-bit kernel.
    #[error("lattice overflow: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Argument(msg.into()))
}
