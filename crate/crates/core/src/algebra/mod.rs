//! Exact arithmetic: rationals, sparse polynomials, normalized rational
//! functions, differentiation, substitution and variety membership.

mod gcd;
mod poly;
mod ratfn;
mod registry;
mod variety;

pub use gcd::{content_and_primitive, gcd, pseudo_remainder};
pub use poly::{MPoly, Monomial};
pub use ratfn::{Bindings, RatFn};
pub use registry::{Var, VarRegistry, STANDARD_SYMBOLS};
pub use variety::vanishes_on_variety;

use num_bigint::BigInt;
use thiserror::Error;

/// Exact rational scalar.
pub type Q = num_rational::BigRational;

/// `n / d` as an exact rational.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("substitution makes the denominator identically zero (bindings: {0})")]
    ZeroDenominator(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("registry: {0}")]
    Registry(String),
    #[error("constraints are not triangular: {0}")]
    NonTriangular(String),
}

/// Shorthand for a symbol of the standard registry.
pub fn sym(name: &str) -> RatFn {
    RatFn::symbol(&VarRegistry::standard(), name)
        .unwrap_or_else(|_| panic!("`{name}` is not a standard symbol"))
}

/// Shorthand for a variable index of the standard registry.
pub fn var(name: &str) -> Var {
    VarRegistry::standard()
        .var(name)
        .unwrap_or_else(|_| panic!("`{name}` is not a standard symbol"))
}
