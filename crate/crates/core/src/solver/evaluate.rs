use crate::compiler::{GroundInstance, IntervalKind};
use crate::scalar::{threshold, Scalar};

use super::{Evaluation, SolveError, Violation};

/// Precomputed row structure for repeated evaluation of bound vectors.
pub struct Evaluator<'g, T> {
    pub g: &'g GroundInstance<T>,
    /// Per slot: supply rows over future intervals as `(interval, coef)`.
    rows: Vec<Vec<(usize, T)>>,
    /// Per slot: largest weighted past demand, floored at 0.
    fixed: Vec<T>,
    /// Per slot: demands of its future intervals.
    future: Vec<Vec<T>>,
    rel_tol: T,
}

impl<'g, T: Scalar> Evaluator<'g, T> {
    pub fn new(g: &'g GroundInstance<T>, tolerance: f64) -> Self {
        let n = g.periods.len();
        let mut rows = vec![Vec::new(); n];
        let mut fixed = vec![T::zero(); n];
        for r in &g.supply_rows {
            let iv = &g.intervals[r.interval];
            match iv.kind {
                IntervalKind::Fixed => fixed[r.slot] = fixed[r.slot].max(r.coef * iv.demand),
                IntervalKind::Min => rows[r.slot].push((r.interval, r.coef)),
            }
        }
        let mut future = vec![Vec::new(); n];
        for (k, slot) in g.min_records() {
            future[slot].push(g.intervals[k].demand);
        }
        Self { g, rows, fixed, future, rel_tol: T::lit(tolerance) }
    }

    pub fn slots(&self) -> usize {
        self.g.periods.len()
    }

    /// Demands of the future intervals in `slot`.
    pub fn future_demands(&self, slot: usize) -> &[T] {
        &self.future[slot]
    }

    #[inline]
    fn kw(&self, interval: usize, bounds: &[T]) -> T {
        let iv = &self.g.intervals[interval];
        match iv.kind {
            IntervalKind::Fixed => iv.demand,
            IntervalKind::Min => iv.demand.min(bounds[iv.slot.unwrap()]),
        }
    }

    pub fn ppsd(&self, slot: usize, bounds: &[T]) -> T {
        let mut v = self.fixed[slot];
        if self.g.bound_le_supply.is_some() {
            v = v.max(bounds[slot]);
        }
        for &(k, c) in &self.rows[slot] {
            v = v.max(c * self.kw(k, bounds));
        }
        v
    }

    pub fn slot_shed(&self, slot: usize, level: T) -> T {
        let s = self.future[slot].iter().fold(T::zero(), |acc, &d| acc + (d - level).max(T::zero()));
        s * self.g.time_interval_size
    }

    pub fn shed(&self, bounds: &[T]) -> T {
        (0..self.slots()).fold(T::zero(), |acc, s| acc + self.slot_shed(s, bounds[s]))
    }

    pub fn objective(&self, bounds: &[T]) -> T {
        let sum = (0..self.slots()).fold(T::zero(), |acc, s| acc + self.ppsd(s, bounds));
        self.g.rate * sum
    }

    pub fn within_budget(&self, shed: T) -> bool {
        shed <= self.g.budget + threshold(shed, self.g.budget, self.rel_tol)
    }

    /// Objective when the bounds are feasible.
    pub fn feasible_objective(&self, bounds: &[T]) -> Option<T> {
        if bounds.iter().any(|b| !(*b >= T::zero())) || !self.within_budget(self.shed(bounds)) {
            return None;
        }
        Some(self.objective(bounds))
    }

    pub fn evaluate(&self, bounds: &[T]) -> Result<Evaluation<T>, SolveError> {
        let g = self.g;
        if bounds.len() != g.periods.len() {
            return Err(SolveError::DimensionMismatch { expected: g.periods.len(), got: bounds.len() });
        }
        let mut violations = Vec::new();
        for (s, b) in bounds.iter().enumerate() {
            if !(*b >= T::zero()) || !b.is_finite() {
                violations.push(Violation {
                    constraint: g.bound_nonneg.clone().unwrap_or_else(|| "bound".into()),
                    time: None,
                    period: Some(g.periods[s]),
                    slack: b.as_f64(),
                });
            }
        }
        let kw: Vec<T> = (0..g.intervals.len()).map(|k| self.kw(k, bounds)).collect();
        let ppsd: Vec<T> = (0..self.slots()).map(|s| self.ppsd(s, bounds)).collect();
        let shed = self.shed(bounds);
        if !self.within_budget(shed) {
            violations.push(Violation {
                constraint: "budget".into(),
                time: None,
                period: None,
                slack: (g.budget - shed).as_f64(),
            });
        }
        let objective = g.rate * ppsd.iter().fold(T::zero(), |a, &b| a + b);
        Ok(Evaluation { kw, ppsd, shed, objective, feasible: violations.is_empty(), violations })
    }
}

/// Propagates a bound vector through the instance.
pub fn evaluate<T: Scalar>(g: &GroundInstance<T>, bounds: &[T]) -> Result<Evaluation<T>, SolveError> {
    Evaluator::new(g, super::SolverConfig::default().tolerance).evaluate(bounds)
}
