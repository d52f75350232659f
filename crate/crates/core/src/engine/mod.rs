//! Optimization backends: a dense two-phase simplex solver for linear
//! programs and an operator-splitting solver for the composite recovery
//! programs.

pub mod lp;
pub mod split;

pub use lp::{solve_lp, LinearProgram, LpBuilder, LpOptions, LpSolution, PivotRule, Sense};
pub use split::{solve_split, ProxTerm, SplitOptions, SplitProblem, SplitSolution};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}
