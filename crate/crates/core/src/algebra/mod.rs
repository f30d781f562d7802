//! Exact arithmetic over ℚ(i): Gaussian rationals, sparse multivariate
//! polynomials and their fraction field, with double-precision evaluation.

mod gaussrat;
pub mod gcd;
pub mod linsolve;
mod parse;
mod poly;
mod ratfun;

use thiserror::Error;

pub use gaussrat::GaussRat;
pub use linsolve::LinSolve;
pub use parse::{parse_poly, parse_ratfun, ParseError};
pub use poly::{Monomial, Poly, PolyDisplay, DEGREE_BOUND, MAX_VARS};
pub use ratfun::{default_names, RatFun, RatFunDisplay};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("pole at {point:?}")]
    Pole { point: Vec<f64> },
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
