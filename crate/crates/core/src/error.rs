use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on the arguments does not hold.
    InvalidInput(String),
    /// Input is structurally valid but numerically degenerate (e.g. a zero vector).
    Degenerate(&'static str),
    /// Feature dimensions disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// The ground-truth reference image has no entry in the database.
    MissingGroundTruth(String),
    /// A box contains no covered pixel of a LoC map.
    NoEvidence,
    /// A metric is undefined for the given input (e.g. AP with no positives).
    UndefinedMetric(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Self::Degenerate(what) => write!(f, "degenerate input: {what}"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::MissingGroundTruth(id) => {
                write!(f, "ground-truth image `{id}` is not in the reference database")
            }
            Self::NoEvidence => write!(f, "box contains no covered pixel"),
            Self::UndefinedMetric(why) => write!(f, "metric undefined: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
