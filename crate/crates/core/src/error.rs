use thiserror::Error;

use crate::kernel::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel: {}", join_violations(.0))]
    InvalidKernel(Vec<Violation>),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mean degree is zero; clustering normalization is undefined")]
    ZeroMeanDegree,

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e} after {evaluations} evaluations)")]
    QuadratureNonConvergence {
        requested: f64,
        achieved: f64,
        evaluations: usize,
    },

    #[error("{what} exceeds the work budget ({cost:e} > {budget:e})")]
    BudgetExceeded { what: String, cost: f64, budget: f64 },

    #[error("estimate undefined: {0}")]
    UndefinedEstimate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
