use thiserror::Error;

use crate::algebra::NewtonPolygon;

/// Errors raised anywhere in the toolkit.
///
/// Witness payloads are rendered strings so that they can be copied
/// verbatim into verification reports.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus is not monic of the expected degree")]
    BadModulus,
    #[error("modulus {0:?} is reducible over the prime field")]
    ReducibleModulus(Vec<u32>),
    #[error("no standard modulus for p = {p}, f = {f}")]
    NoStandardModulus { p: u32, f: u32 },
    #[error("cap exceeded: {what} = {value} > {cap}")]
    CapExceeded { what: &'static str, value: u64, cap: u64 },
    #[error("operands belong to different fields")]
    MixedFields,
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by an element that is zero modulo its precision")]
    DivisionByUncertainZero,
    #[error("newton polygon needs at least two finite points")]
    DegeneratePolynomial,
    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("field is not in the tower of the target")]
    NotInTower,
    #[error("additive polynomial has zero linear coefficient")]
    InseparablePolynomial,
    #[error("roots require an extension of the field")]
    ExtensionRequired(Box<NewtonPolygon>),
    #[error("o-module structure violated: {0}")]
    StructureViolation(String),
    #[error("kernel is not a direct summand: {0}")]
    NotASummand(String),
    #[error("character law violated: {0}")]
    CharacterViolation(String),
    #[error("valuation mismatch: {0}")]
    ValuationMismatch(String),
    #[error("orbit is not free: {0}")]
    OrbitNotFree(String),
    #[error("determinant character mismatch: {0}")]
    DeterminantMismatch(String),
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("element is not a unit")]
    NotAUnit,
    #[error("reduced norm is not Frobenius invariant: {0}")]
    FrobeniusInvarianceViolation(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("report schema mismatch: {0}")]
    SchemaMismatch(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
