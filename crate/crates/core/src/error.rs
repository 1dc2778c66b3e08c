use core::fmt;

use crate::domain::StratumTag;

/// Errors raised by the core numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The domain parameters violate a structural invariant.
    InvalidSpec(&'static str),
    /// A vector or matrix has the wrong length for the domain it is used with.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A scalar argument is out of range.
    InvalidArgument(&'static str),
    /// A direction with every block equal to zero was supplied.
    ZeroDirection,
    /// The point lies on the wrong boundary stratum for the requested operation.
    WrongStratum { expected: StratumTag, found: StratumTag },
    /// The point is not strictly inside the domain.
    NotInterior,
    /// A block norm vanished where the closed-form expression needs it nonzero.
    VanishingBlock(usize),
    /// The series would need more terms than the configured budget allows.
    TermBudgetExceeded { needed: usize, budget: usize },
    /// Rejection sampling accepted too few proposals to be useful.
    LowAcceptance { ratio: f64 },
    /// Two domains (or a map and a domain) are not compatible.
    IncompatibleSpecs(&'static str),
    /// A kernel value did not converge within the configured tail threshold.
    NotConverged { tail: f64 },
    /// A point-evaluation oracle does not behave like a biholomorphism of the domains.
    NotABiholomorphism { reason: &'static str, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid domain specification: {msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, found {found}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ZeroDirection => write!(f, "direction has no nonzero block"),
            Error::WrongStratum { expected, found } => {
                write!(f, "point lies on stratum {found:?}, expected {expected:?}")
            }
            Error::NotInterior => write!(f, "point is not in the interior of the domain"),
            Error::VanishingBlock(j) => write!(f, "block {j} vanishes"),
            Error::TermBudgetExceeded { needed, budget } => {
                write!(f, "series needs {needed} terms, budget is {budget}")
            }
            Error::LowAcceptance { ratio } => {
                write!(f, "rejection sampler acceptance ratio {ratio:e} is below 1e-6")
            }
            Error::IncompatibleSpecs(msg) => write!(f, "incompatible domains: {msg}"),
            Error::NotConverged { tail } => {
                write!(f, "kernel series did not converge (tail estimate {tail:e})")
            }
            Error::NotABiholomorphism { reason, residual } => {
                write!(f, "map is not a biholomorphism: {reason} (residual {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
