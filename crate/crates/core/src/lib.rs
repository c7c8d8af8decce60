//! Symbolic-numeric toolkit for coupled Painlevé II Hamiltonian systems in
//! dimension four: exact rational-function arithmetic, the system and
//! transformation catalog, holomorphy charts, the two-time commuting
//! structure, complex-time integration, and verification reports.

pub mod algebra;
pub mod error;
pub mod expr;
pub mod hamiltonian;
pub mod holomorphy;
pub mod linsolve;
pub mod numerics;
pub mod transforms;
pub mod two_time;
pub mod verify;

pub use algebra::{AlgebraError, MPoly, RatFn, Var, VarRegistry, Q};
pub use error::{Error, Result};
pub use expr::{parse_expr, print_expr, ParseError};
