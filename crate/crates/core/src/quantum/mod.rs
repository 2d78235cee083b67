//! Quantum bounds.
//!
//! Upper bounds come from the weighted Lovász theta number, lower bounds
//! from explicit quantum strategies found by see-saw optimization.

mod seesaw;
mod strategy;

pub use seesaw::{seesaw_lower_bound, RestartTrace, SeesawOptions, SeesawResult};
pub use strategy::{born_probabilities, QuantumStrategy, StrategyJson};

use exclusivity_sdp::{solve, SdpProblem, SolveOptions, Status, SymMatrix};
use nalgebra::DMatrix;

use crate::graph::Graph;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaDiagnostics {
    pub status: Status,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaResult {
    pub value: f64,
    /// Optimal `B`; a Gram factorization of it yields an orthonormal labelling.
    pub psd_witness: DMatrix<f64>,
    pub diagnostics: ThetaDiagnostics,
}

/// Relative tolerance requested from the SDP solver.
pub const THETA_TOL: f64 = 1e-9;

/// Weighted Lovász theta:
/// `max Σ √(w_i w_j) B_ij  s.t.  tr B = 1, B_ij = 0 on edges, B ⪰ 0`.
pub fn lovasz_theta<G: AsRef<Graph> + ?Sized>(g: &G) -> Result<ThetaResult> {
    let g = g.as_ref();
    let n = g.len();
    if n == 0 {
        return Ok(ThetaResult {
            value: 0.0,
            psd_witness: DMatrix::zeros(0, 0),
            diagnostics: ThetaDiagnostics {
                status: Status::Optimal,
                iterations: 0,
                primal_objective: 0.0,
                dual_objective: 0.0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                gap: 0.0,
                min_eigenvalue: 0.0,
            },
        });
    }
    let mut c = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            c.set(i, j, (g.weight(i) * g.weight(j)).sqrt());
        }
    }
    let mut problem = SdpProblem::new(c)?.with_constraint(SymMatrix::identity(n), 1.0)?;
    for (u, v) in g.edges() {
        problem.add_constraint(SymMatrix::unit(n, u, v), 0.0)?;
    }
    let sol = solve(
        &problem,
        &SolveOptions {
            tol: THETA_TOL,
            max_iter: 200,
        },
    )?;
    let diagnostics = ThetaDiagnostics {
        status: sol.status,
        iterations: sol.iterations,
        primal_objective: sol.primal_objective,
        dual_objective: sol.dual_objective,
        primal_residual: sol.residuals.primal,
        dual_residual: sol.residuals.dual,
        gap: sol.residuals.gap,
        min_eigenvalue: sol.min_primal_eigenvalue(),
    };
    if !sol.is_optimal() {
        return Err(Error::SolverFailed(format!(
            "theta SDP on {n} vertices ended with {:?} after {} iterations \
             (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
            sol.status, sol.iterations, sol.residuals.primal, sol.residuals.dual, sol.residuals.gap
        )));
    }
    Ok(ThetaResult {
        value: 0.5 * (sol.primal_objective + sol.dual_objective),
        psd_witness: sol.x,
        diagnostics,
    })
}

/// `n cos(π/n) / (1 + cos(π/n))` for odd `n ≥ 5`.
pub fn theta_cycle_formula(n: usize) -> Result<f64> {
    if n < 5 || n % 2 == 0 {
        return Err(Error::OutOfRange(format!(
            "cycle formula needs an odd length of at least 5, got {n}"
        )));
    }
    let c = (std::f64::consts::PI / n as f64).cos();
    Ok(n as f64 * c / (1.0 + c))
}
