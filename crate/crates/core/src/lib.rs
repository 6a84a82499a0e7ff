//! Numerical laboratory for radial Fock-type spaces `F_h`.
//!
//! The crate builds the weights, point sets and generating functions that decide whether
//! `F_h` admits a Riesz basis of normalized reproducing kernels, and evaluates the related
//! norms and Gram matrices in log-domain arithmetic so that doubly-exponential scales stay
//! representable.
//!
//! The low-level substrate in [`numeric`] is generic over the float type; the rest of the crate
//! works in `f64` through the aliases below.

pub mod casestudies;
pub mod error;
pub mod genfun;
pub mod io;
pub mod kernels;
pub mod moments;
pub mod numeric;
pub mod rieszlab;
pub mod weightlab;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type LogReal = numeric::LogReal<f64>;
pub type LogComplex = numeric::LogComplex<f64>;
pub type QuadratureSpec = numeric::QuadratureSpec<f64>;
pub type CMatrix = numeric::CMatrix<f64>;
pub type Complex = num_complex::Complex<f64>;
