use thiserror::Error;

use crate::numeric::{EigenError, QuadError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("operation not defined for weight family {family}: {what}")]
    FamilyMismatch { family: String, what: String },
    #[error("regime mismatch: {0}")]
    Regime(String),
    #[error("no flat point within horizon {horizon} (searched from {start})")]
    NoFlatPoint { start: f64, horizon: f64 },
    #[error("search exceeded horizon {horizon}: {what}")]
    Horizon { horizon: f64, what: String },
    #[error("Laplace point for n = {failed_at} not reachable (psi' bounded below {target}); largest reachable n is {max_reachable:?}")]
    LaplaceUnreachable { failed_at: usize, target: f64, max_reachable: Option<usize> },
    #[error("integrand not integrable on the {side} side")]
    NonIntegrable { side: &'static str },
    #[error("moment table too short: {len} entries, need roughly {required}")]
    TableTooShort { len: usize, required: usize },
    #[error("point hits root {root} of factor {factor}")]
    RootHit { factor: usize, root: usize },
    #[error("point is not a root (residual {residual:e})")]
    NotARoot { residual: f64 },
    #[error("size {size} exceeds the feasible limit {limit}")]
    Infeasible { size: usize, limit: usize },
    #[error("constraint violated at index {index}: {what}")]
    Constraint { index: usize, what: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
