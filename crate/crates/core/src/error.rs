use thiserror::Error;

use crate::ntt::Domain;

/// Errors raised by the arithmetic, sampling, transform and KEM layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is outside the supported range 2 < q < 2^24")]
    OutOfRange(u64),
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("no negacyclic root of unity: 2*{n} does not divide {q} - 1")]
    NoNegacyclicRoot { n: usize, q: u32 },
    #[error("polynomial length {0} is not a supported power of two")]
    UnsupportedSize(usize),
    #[error("expected a polynomial in the {expected:?} domain, found {found:?}")]
    DomainMismatch { expected: Domain, found: Domain },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },
    #[error("coefficient {value} at index {index} is not reduced modulo {q}")]
    Unreduced { index: usize, value: u32, q: u32 },
    #[error("cannot absorb into a sponge that is already squeezing")]
    AbsorbAfterSqueeze,
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed encoding: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
