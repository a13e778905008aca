use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A topology that violates the hop/node count rules.
    InvalidTopology(String),
    /// Array shapes that do not agree with the owning topology.
    Dimension(String),
    /// A coefficient or parameter that is NaN or infinite.
    NonFinite(&'static str),
    EmptyDataset,
    /// A configuration value outside its valid range.
    Config(String),
    /// The request is well formed but exceeds what the routine supports.
    Capability(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidTopology(msg) => write!(f, "invalid topology: {msg}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::EmptyDataset => f.write_str("dataset is empty"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Capability(msg) => write!(f, "unsupported request: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
