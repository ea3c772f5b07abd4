use thiserror::Error;

/// Errors raised by the arithmetic-dynamics toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero input where a nonzero rational is required")]
    ZeroInput,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid projective point: both coordinates are zero")]
    ZeroPoint,
    #[error("points coincide; distance is undefined")]
    CoincidentPoints,
    #[error("map has degree {0}; degree at least 2 is required")]
    DegreeTooSmall(usize),
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,
    #[error("numerator and denominator share a common root (resultant is zero)")]
    ZeroResultant,
    #[error("{0} is a pole of the map")]
    Pole(String),
    #[error("coordinates exceed the {cap}-bit cap at orbit index {index}")]
    BitCapExceeded { index: usize, cap: u64 },
    #[error("iteration cap {0} reached before the requested tolerance")]
    IterationCap(usize),
    #[error("p-adic precision exhausted at orbit index {index} ({digits} digits)")]
    PrecisionExhausted { index: usize, digits: u64 },
    #[error("orbit point equals the target exactly; the valuation is infinite")]
    ExactZero,
    #[error("log comparison undecided after {0} precision doublings")]
    Undecided(u32),
    #[error("lifting-the-exponent precondition failed: {0}")]
    LtePrecondition(&'static str),
    #[error("{0} is not a unit at p = {1}")]
    NotAUnit(String, u64),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("empty range")]
    EmptyRange,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
