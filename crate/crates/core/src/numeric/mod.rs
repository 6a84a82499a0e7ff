//! Extreme-range scalar arithmetic and the small numerical kernels everything else sits on:
//! signed log-domain reals and complexes, compensated log-sums, log-domain adaptive
//! quadrature, an exact convex-fit defect, and a Hermitian Jacobi eigensolver.
//!
//! Everything here is generic over the floating point type ([`Real`]); the crate root exposes
//! `f64` aliases.

mod convex;
mod logcomplex;
mod logreal;
mod matrix;
mod quad;
mod scalar;
mod sum;

pub use convex::{convex_fit, convex_fit_defect, ConvexFit};
pub use logcomplex::{wrap_phase, LogComplex};
pub use logreal::{LogReal, Sign};
pub use matrix::{hermitian_eigen, largest_singular_value, CMatrix, Eigen, EigenError};
pub use quad::{integrate_log, QuadError, QuadResult, QuadratureSpec};
pub use scalar::{Real, Scalar};
pub use sum::{log_sum, log_sum_complex, log_sum_exp, LogSum};
