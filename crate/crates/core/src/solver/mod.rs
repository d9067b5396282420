//! Exhaustive enumeration, branch-and-bound on the integer program, and a
//! local-search heuristic for instances too large for either.

mod enumerate;
mod exact;
mod heuristic;
mod random;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{Assignment, Evaluator, MetricBreakdown};
use crate::ilp::IlpError;
use crate::instance::ScenarioInstance;

pub use enumerate::{primary_count, solve_enumerate, ENUMERATION_LIMIT};
pub use exact::{solve_exact, solve_exact_warm, Budget};
pub use heuristic::{solve_heuristic, solve_heuristic_with, HeuristicParams};
pub use random::random_assignment;

/// Absolute tolerance of every objective comparison.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("{primaries} primary binaries exceed the enumeration limit of {limit}")]
    TooLarge { primaries: usize, limit: usize },
    #[error(transparent)]
    Ilp(#[from] IlpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    BudgetExhausted,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::Feasible => "feasible",
            Self::Infeasible => "infeasible",
            Self::BudgetExhausted => "budget-exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Enumerate,
    Exact,
    Heuristic,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Enumerate => "enumerate",
            Self::Exact => "exact",
            Self::Heuristic => "heuristic",
        })
    }
}

/// Outcome of one solver run.
///
/// `objective` is `None` when no feasible point was found. `bound` is a
/// proven lower bound on the optimum; it equals `objective` when the status
/// is optimal and is `None` for infeasible or unbounded-below searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub nodes: u64,
    pub wall_ms: f64,
    pub metrics: Option<MetricBreakdown<f64>>,
    pub assignment: Option<Assignment>,
}

impl SolveReport {
    fn new(method: Method, status: SolveStatus, started: Instant) -> Self {
        Self {
            method,
            status,
            objective: None,
            bound: None,
            nodes: 0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            metrics: None,
            assignment: None,
        }
    }

    /// Fill `metrics` from the assignment, if any.
    pub fn with_metrics(mut self, inst: &ScenarioInstance, mu: f64) -> Self {
        if let Some(a) = &self.assignment {
            let ev = Evaluator::<f64>::new(inst).with_mu(mu);
            self.metrics = ev.metrics_unchecked(a).ok();
        }
        self
    }
}

#[cfg(test)]
mod tests;
