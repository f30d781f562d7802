//! Symbolic and numeric tools for overdetermined systems of first-order
//! operators with rational coefficients: involutivity checks, the
//! compatibility complex and its adjoint, Hörmander quadratic forms, a
//! weighted least-squares grid solver and additive Cousin gluing.

pub mod algebra;
pub mod complex;
pub mod cousin;
pub mod diffop;
pub mod multiindex;
pub mod qform;
pub mod solver;
pub mod system;
