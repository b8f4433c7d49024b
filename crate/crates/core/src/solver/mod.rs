//! Evaluation and optimization of grounded peak-demand instances.
//!
//! Given one bound per future period the rest of the model is determined:
//! `kW[t] = min(demand(t), bound[period(t)])` on future intervals, the
//! supply demand of each period is the largest of its bound (when
//! `bound <= supply` is declared), zero and its weighted kW rows, and the
//! shed energy is what the bounds cut off. Every solver here searches over
//! bound vectors only.

mod check;
mod evaluate;
mod exact;
mod oracle;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::GroundInstance;
use crate::scalar::Scalar;
use crate::timeseries::{DecisionParameterTable, PeriodIndex, TimeIndex};

pub use check::{check_solution, CheckReport};
pub use evaluate::{evaluate, Evaluator};
pub use exact::{solve_zero_budget, zero_shed_solution};
pub use oracle::{brute_force_oracle, brute_force_oracle_with};
pub use search::{candidate_levels, local_search, solve_breakpoints, waterfill_level};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("expected {expected} bounds, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the zero-budget solver needs budget 0, got {0}")]
    NonzeroBudget(f64),
    #[error("{combos} candidate combinations exceed the limit of {limit}")]
    ComboLimitExceeded { combos: f64, limit: u64 },
    #[error("seed solution is infeasible: {0}")]
    InfeasibleSeed(String),
    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: f64, limit: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SolverConfig {
    /// Relative tolerance for constraint checks.
    pub tolerance: f64,
    /// Oracle grid spacing in kW.
    pub grid_step: f64,
    pub max_exhaustive_combos: u64,
    pub refinement_iters: usize,
    /// Water-fill levels per period in the breakpoint search (`Q`).
    pub waterfill_steps: usize,
    pub local_search_iters: usize,
    pub max_grid_points: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            grid_step: 0.1,
            max_exhaustive_combos: 1_000_000,
            refinement_iters: 4,
            waterfill_steps: 4,
            local_search_iters: 10_000,
            max_grid_points: 1e9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SolveError::InvalidConfig(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(SolveError::InvalidConfig(format!("gridStep must be > 0, got {}", self.grid_step)));
        }
        if self.waterfill_steps == 0 {
            return Err(SolveError::InvalidConfig("waterfillSteps must be >= 1".into()));
        }
        Ok(())
    }
}

/// A violated ground constraint with its binding and (negative) slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeIndex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<PeriodIndex>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    /// One entry per ground interval.
    pub kw: Vec<T>,
    /// One entry per future period.
    pub ppsd: Vec<T>,
    pub shed: T,
    pub objective: T,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub periods: Vec<PeriodIndex>,
    pub bounds: Vec<T>,
    pub ppsd: Vec<T>,
    pub times: Vec<TimeIndex>,
    pub kw: Vec<T>,
    pub objective: T,
    pub shed_total: T,
    pub status: Status,
}

#[derive(Serialize)]
struct PeriodValue<T> {
    period: PeriodIndex,
    value: T,
}

#[derive(Serialize)]
struct TimeValue<T> {
    time: TimeIndex,
    value: T,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolutionJson<T> {
    status: Status,
    objective: T,
    shed_total: T,
    bounds: Vec<PeriodValue<T>>,
    ppsd: Vec<PeriodValue<T>>,
    kw: Vec<TimeValue<T>>,
}

impl<T: Scalar> Serialize for Solution<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let per = |v: &[T]| {
            self.periods.iter().zip(v).map(|(p, x)| PeriodValue { period: *p, value: *x }).collect()
        };
        SolutionJson {
            status: self.status,
            objective: self.objective,
            shed_total: self.shed_total,
            bounds: per(&self.bounds),
            ppsd: per(&self.ppsd),
            kw: self.times.iter().zip(&self.kw).map(|(t, x)| TimeValue { time: *t, value: *x }).collect(),
        }
        .serialize(s)
    }
}

impl<T: Scalar> Solution<T> {
    pub(crate) fn from_evaluation(g: &GroundInstance<T>, bounds: Vec<T>, e: Evaluation<T>, status: Status) -> Self {
        Self {
            periods: g.periods.clone(),
            bounds,
            ppsd: e.ppsd,
            times: g.intervals.iter().map(|i| i.time()).collect(),
            kw: e.kw,
            objective: e.objective,
            shed_total: e.shed,
            status,
        }
    }

    /// Learned tables named after the instance's parameter roles: bound and
    /// supply per period, kW per interval.
    pub fn parameter_tables(&self, g: &GroundInstance<T>) -> [DecisionParameterTable<T>; 3] {
        let per = |v: &[T]| self.periods.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
        [
            DecisionParameterTable::per_period(g.names.bound.clone(), per(&self.bounds)),
            DecisionParameterTable::per_period(g.names.supply.clone(), per(&self.ppsd)),
            DecisionParameterTable::per_interval(
                g.names.kw.clone(),
                self.times.iter().copied().zip(self.kw.iter().copied()).collect::<Vec<_>>(),
            ),
        ]
    }
}
