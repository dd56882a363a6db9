//! Numerical engines: dense LP (two-phase simplex), convex QP (operator
//! splitting) and sparse preconditioned conjugate gradients.
//!
//! All solvers are pure functions of their inputs and deterministic; there is
//! no shared mutable state. Tolerances are centralized in [`Tolerances`].

mod cg;
mod lp;
mod qp;
mod sparse;

pub use cg::{cg_solve, CgResult};
pub use lp::{lp_solve, lp_solve_with, LpOutcome, LpProblem};
pub use qp::{qp_solve, QpProblem, QpReport, QpSolution};
pub use sparse::CsrMatrix;

use thiserror::Error;

/// Central tolerance configuration. Defaults match the documented contracts
/// of the individual solvers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute feasibility tolerance for LP constraints.
    pub lp_feasibility: f64,
    /// KKT residual tolerance for the QP solver.
    pub qp_kkt: f64,
    /// Iteration cap for the QP solver.
    pub qp_max_iter: usize,
    /// Relative residual for conjugate-gradient solves.
    pub cg_relative: f64,
    /// Iteration cap for conjugate-gradient solves.
    pub cg_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lp_feasibility: 1e-9,
            qp_kkt: 1e-8,
            qp_max_iter: 200_000,
            cg_relative: 1e-10,
            cg_max_iter: 20_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    CgStalled { iterations: usize, residual: f64 },
    #[error("QP did not reach tolerance {tol:.3e} in {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    QpStalled {
        iterations: usize,
        tol: f64,
        primal: f64,
        dual: f64,
        /// Residual history sampled every few hundred iterations.
        history: Vec<(usize, f64, f64)>,
    },
    #[error("simplex pivot limit exceeded")]
    PivotLimit,
    #[error("simplex solution failed verification: {0}")]
    Inconsistent(String),
}
