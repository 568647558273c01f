//! Embedded solver for small dense conic programs over products of PSD
//! cones and the nonnegative orthant, with free variables and equality
//! constraints.
//!
//! The engine is a primal-dual interior-point method on the homogeneous
//! self-dual embedding with Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector, so infeasible programs terminate with an improving
//! ray rather than a diverging residual. Everything is deterministic: no
//! randomness, no threads, a fixed elimination order.

use thiserror::Error;

use crate::conic::{ConicError, ConicProgram, Sense};
use crate::matrix::SymMatrix;

pub(crate) mod linalg;
mod ipm;

/// Hard cap on Σ s(s+1)/2 over the PSD blocks; programs beyond it are
/// refused before any factorization is attempted.
pub const PSD_ENTRY_CAP: usize = 200_000;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    pub max_iter: usize,
    /// Ruiz equilibration of the constraint matrix.
    pub scaling: bool,
    /// Per-iteration progress lines on stderr.
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            eps_gap: 1e-8,
            max_iter: 200_000,
            scaling: true,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterReached,
}

/// A point in the program's variable space.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub free: Vec<f64>,
    pub nonneg: Vec<f64>,
    pub psd: Vec<SymMatrix>,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Improving ray certifying infeasibility.
#[derive(Debug, Clone)]
pub enum Certificate {
    /// y with bᵀy = 1 and −Aᵀy in the dual cone up to `residual`.
    PrimalInfeasible { y: Vec<f64>, residual: f64 },
    /// x in the cone with cᵀx = −1 and ‖Ax‖ ≤ `residual`.
    DualInfeasible { x: Assignment, residual: f64 },
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Primal point (already divided by the embedding's τ).
    pub primal: Assignment,
    /// Equality multipliers.
    pub dual_y: Vec<f64>,
    /// Dual slack in the cone (free components are identically zero and
    /// omitted).
    pub dual_slack: Assignment,
    pub residuals: Residuals,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("program exceeds the solver cap: {entries} PSD entries > {cap}")]
    CapExceeded { entries: usize, cap: usize },
    #[error("invalid program: {0}")]
    Invalid(#[from] ConicError),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

/// Solves the program. Max-sense input is negated internally and reported
/// back in the caller's orientation, so `primal_value` is always the value
/// of the program as posed.
pub fn solve(p: &ConicProgram, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    if !(cfg.eps_primal > 0.0 && cfg.eps_dual > 0.0 && cfg.eps_gap > 0.0) {
        return Err(SolverError::BadConfig("tolerances must be positive".into()));
    }
    if cfg.max_iter == 0 {
        return Err(SolverError::BadConfig("max_iter must be positive".into()));
    }
    p.validate()?;
    let entries = p.total_psd_entries();
    if entries > PSD_ENTRY_CAP {
        return Err(SolverError::CapExceeded { entries, cap: PSD_ENTRY_CAP });
    }
    if p.num_scalar_variables() == 0 {
        return Err(SolverError::Invalid(ConicError::Invalid(
            "program has no variables".into(),
        )));
    }
    let mut sol = ipm::solve_canonical(p, cfg)?;
    if p.sense == Sense::Max {
        sol.primal_value = -sol.primal_value;
        sol.dual_value = -sol.dual_value;
    }
    Ok(sol)
}

/// Nearest PSD matrix in Frobenius norm: eigendecompose and clip negative
/// eigenvalues to zero.
pub fn psd_project(m: &SymMatrix) -> Result<SymMatrix, SolverError> {
    let n = m.n();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = m.get(i, j);
        }
    }
    let (d, v) = linalg::sym_eig(n, &a)
        .ok_or_else(|| SolverError::Numerical("eigensolver did not converge".into()))?;
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (k, dk) in d.iter().enumerate() {
                if *dk > 0.0 {
                    acc += dk * v.at(i, k) * v.at(j, k);
                }
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}
