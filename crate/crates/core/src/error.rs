//! Shared error type.
//!
//! Everything that can go wrong here is a *mathematical* precondition
//! failure (bad discriminant, congruence violation, rank deficiency, ...)
//! or a numerical one (a value that should have been an integer wasn't,
//! even after escalating precision).  Both kinds are reported through the
//! same enum so callers can distinguish "you asked for something
//! ill-posed" from "the computation could not certify its answer".

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("working precision must be at least 64 bits, got {0}")]
    PrecisionTooLow(u32),

    #[error("integer-recognition tolerance must lie in (0, 1/4), got {0}")]
    ToleranceOutOfRange(f64),

    #[error("{0} is not a discriminant (must be = 0 or 1 mod 4)")]
    NotADiscriminant(i64),

    #[error("expected a negative discriminant, got {0}")]
    ExpectedNegativeDiscriminant(i64),

    #[error("class numbers H(n) need n = 0 or 3 mod 4, got {0}")]
    BadClassNumberArgument(u64),

    #[error("congruence violation: {0}")]
    Congruence(String),

    #[error("level {0} is not supported by this construction")]
    UnsupportedLevel(u32),

    #[error("{c} is not an exact divisor of {n} (need gcd(c, n/c) = 1)")]
    NotExactDivisor { c: u32, n: u32 },

    #[error("point is not in the upper half-plane (im = {0})")]
    NotInUpperHalfPlane(f64),

    #[error("division by a q-series whose leading coefficient is not invertible")]
    SeriesDivision,

    #[error("series exponent {num}/{den} is not an integer where one is required")]
    NonIntegralExponent { num: i64, den: u32 },

    #[error("value {value} is not within {tol:e} of an integer (residual {residual:e})")]
    NotAnInteger {
        value: String,
        residual: f64,
        tol: f64,
    },

    #[error("could not reconstruct {value} as a rational with denominator <= {bound}")]
    RationalReconstruction { value: String, bound: u64 },

    #[error("computation did not stabilize at {bits} bits: {context}")]
    PrecisionExhausted { bits: u32, context: String },

    #[error("coefficient matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("a non-finite value appeared during evaluation")]
    NonFinite,

    #[error("{0}")]
    Validation(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Convenience constructor for ad-hoc validation failures.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
