use alloc::string::String;
use core::fmt;

/// Error taxonomy shared by every operation in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Incompatible matrix dimensions.
    Shape { context: &'static str, expected: (usize, usize), got: (usize, usize) },
    /// An argument outside its documented domain.
    Argument(String),
    /// Non-finite values or a numerically meaningless state.
    Numeric(String),
    /// A metric whose denominator vanished.
    UndefinedMetric(&'static str),
    /// An operation called out of order (e.g. backward before forward).
    State(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { context, expected, got } => write!(
                f,
                "shape mismatch in {context}: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::UndefinedMetric(what) => write!(f, "undefined metric: {what}"),
            Error::State(msg) => write!(f, "invalid state: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
