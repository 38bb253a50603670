use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p is not prime: {0}")]
    NotPrime(u64),

    #[error("p must be at least 5, got {0}")]
    TooSmall(u64),

    #[error("modulus {0} is not below the 2^62 cap")]
    ModulusTooLarge(u64),

    #[error("invalid n = {n} for p = {p}: {reason}")]
    BadN { p: u64, n: u64, reason: &'static str },

    #[error("residue {m} is not a unit modulo {p}")]
    BadResidue { p: u64, m: u64 },

    #[error("x^{n} = {m} has no solution modulo {p}: {m} is not a power residue of degree {n}")]
    NotResidue { p: u64, n: u64, m: u64 },

    #[error("{what} = {value} exceeds the scale cap {cap}")]
    ScaleLimit {
        what: &'static str,
        value: u64,
        cap: u64,
    },

    #[error("subgroup of order {0} was not enumerated")]
    NotEnumerated(u64),

    #[error("empirical delta is undefined for the trivial subgroup")]
    TrivialSubgroup,

    #[error("radius K = {k} outside [1, {max}]")]
    BadRadius { k: u64, max: u64 },

    #[error("frequency r is zero modulo p; the envelope is undefined")]
    ZeroFrequency,

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("insufficient data for a fit: {0}")]
    InsufficientData(&'static str),

    #[error("Chowla-London bounds violated at p = {p}, n = {n}: k = {k}")]
    BoundViolation { p: u64, n: u64, k: u64 },

    #[error("record format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error comes from a configurable size cap rather than bad input.
    pub fn is_scale_limit(&self) -> bool {
        matches!(self, Error::ScaleLimit { .. } | Error::ModulusTooLarge(_))
    }
}
