use crate::compiler::GroundInstance;
use crate::scalar::Scalar;

use super::{Evaluator, SolveError, Solution, SolverConfig, Status};

/// The cheapest solution that sheds nothing, whatever the budget.
///
/// With zero shedding every bound must cover the future demand of its
/// period, so `kW = demand` everywhere and each supply demand is the
/// largest of its weighted demand rows, zero, and (when `bound <= supply`
/// is declared) that period's largest future demand. The bound is set to
/// the supply demand, the largest headroom that costs nothing.
pub fn zero_shed_solution<T: Scalar>(g: &GroundInstance<T>) -> Solution<T> {
    let ev = Evaluator::new(g, SolverConfig::default().tolerance);
    let c3 = g.bound_le_supply.is_some();
    let mut bounds = Vec::with_capacity(g.periods.len());
    for s in 0..g.periods.len() {
        let max_d = ev.future_demands(s).iter().fold(T::zero(), |m, &d| m.max(d));
        // with no shedding every row sees raw demand
        let rows = {
            let mut v = T::zero();
            for r in g.supply_rows.iter().filter(|r| r.slot == s) {
                v = v.max(r.coef * g.intervals[r.interval].demand);
            }
            v
        };
        let ppsd = if c3 { rows.max(max_d) } else { rows };
        bounds.push(if c3 { ppsd } else { ppsd.max(max_d) });
    }
    let e = ev.evaluate(&bounds).expect("one bound per period");
    let status = if g.budget == T::zero() { Status::Optimal } else { Status::Feasible };
    Solution::from_evaluation(g, bounds, e, status)
}

/// Exact solution for a zero shed budget.
pub fn solve_zero_budget<T: Scalar>(g: &GroundInstance<T>) -> Result<Solution<T>, SolveError> {
    if g.budget != T::zero() {
        return Err(SolveError::NonzeroBudget(g.budget.as_f64()));
    }
    Ok(zero_shed_solution(g))
}
