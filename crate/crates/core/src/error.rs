use core::fmt;

/// Error type shared by all solver modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    Domain(&'static str),
    /// An iteration failed to converge.
    Convergence(&'static str),
    /// Incompatible vector/matrix/operator dimensions.
    Dimension(&'static str),
    /// A matrix or configuration that must be regular is singular/degenerate.
    Singular(&'static str),
    /// Malformed input data (meshes, schedules, ...).
    Invalid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Convergence(m) => write!(f, "convergence failure: {m}"),
            Error::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Error::Singular(m) => write!(f, "singular configuration: {m}"),
            Error::Invalid(m) => write!(f, "invalid input: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
