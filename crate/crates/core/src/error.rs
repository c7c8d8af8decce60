use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::expr::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },
    #[error("coordinate mismatch: {0}")]
    CoordinateMismatch(String),
    #[error("parameters: {0}")]
    Parameter(String),
    #[error("chart `{chart}`: {message}")]
    Chart { chart: String, message: String },
    #[error("pushforward is not Hamiltonian: mixed partials differ for ({0}, {1})")]
    NotHamiltonian(String, String),
    #[error("pushforward component `{0}` is not polynomial")]
    NotPolynomial(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("numerics: {0}")]
    Numerics(String),
    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
