//! Small dense semidefinite programming.
//!
//! Solves `maximize ⟨C, X⟩ s.t. ⟨A_k, X⟩ = b_k, X ⪰ 0` together with its dual
//! `minimize bᵀy s.t. Σ y_k A_k − C = Z ⪰ 0` by a primal-dual interior-point
//! method. Intended for problems with a few hundred rows at most.

mod matrix;
mod problem;
mod solver;

pub use matrix::{SymMatrix, SYMMETRY_TOL};
pub use problem::{Constraint, SdpProblem, MAX_DIM};
pub use solver::{solve, IterateLog, Residuals, SdpSolution, SolveOptions, Status};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("matrix dimension {found} does not match problem dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {dim} exceeds the dense solver limit of {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("problem data contains non-finite values")]
    NonFinite,
}
