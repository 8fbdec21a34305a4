//! Exact polynomial and rational-function arithmetic over Q in the variables
//! `(t, p_1, ..., p_q)`; variable 0 is always t.

mod gcd;
mod mpoly;
mod ratfn;
mod unipoly;

pub use gcd::{gcd, gcd_all};
pub use mpoly::{arith, parse_ratio, ratio_from_i64, ratio_to_f64, ArithOp, MPoly, Monomial};
pub use ratfn::RatFn;
pub use unipoly::{horner, to_f64_coeffs, UniPoly};

/// Exact rational coefficient; always in lowest terms with positive
/// denominator.
pub type Ratio = num_rational::BigRational;

/// Index of the time variable.
pub const T: usize = 0;
