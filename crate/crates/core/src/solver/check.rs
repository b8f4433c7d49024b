use serde::Serialize;

use crate::compiler::{GroundInstance, IntervalKind};
use crate::scalar::{threshold, Scalar};

use super::{Solution, Violation};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies a solution against every ground constraint and the budget at
/// relative tolerance `tol`.
pub fn check_solution<T: Scalar>(g: &GroundInstance<T>, s: &Solution<T>, tol: f64) -> CheckReport {
    let rel = T::lit(tol);
    let mut out = Vec::new();
    let n = g.periods.len();
    let mut push = |constraint: &str, time, period, slack: T| {
        out.push(Violation { constraint: constraint.to_string(), time, period, slack: slack.as_f64() })
    };
    if s.bounds.len() != n || s.ppsd.len() != n || s.kw.len() != g.intervals.len() || s.periods != g.periods {
        push("shape", None, None, T::zero());
        return CheckReport { violations: out };
    }
    // a >= b within tolerance
    let ge = |a: T, b: T| a >= b - threshold(a, b, rel);

    for r in &g.supply_rows {
        let need = r.coef * s.kw[r.interval];
        let have = s.ppsd[r.slot];
        if !ge(have, need) {
            push(g.constraint_id(r), Some(g.intervals[r.interval].time()), Some(g.periods[r.slot]), have - need);
        }
    }
    for p in 0..n {
        if let Some(id) = &g.bound_le_supply {
            if !ge(s.ppsd[p], s.bounds[p]) {
                push(id, None, Some(g.periods[p]), s.ppsd[p] - s.bounds[p]);
            }
        }
        if !(s.bounds[p] >= T::zero()) {
            let id = g.bound_nonneg.as_deref().unwrap_or("bound");
            push(id, None, Some(g.periods[p]), s.bounds[p]);
        }
        if !(s.ppsd[p] >= T::zero()) {
            push("supply", None, Some(g.periods[p]), s.ppsd[p]);
        }
    }
    let mut shed = T::zero();
    for (k, iv) in g.intervals.iter().enumerate() {
        let kw = s.kw[k];
        let (expected, id) = match iv.kind {
            IntervalKind::Fixed => (iv.demand, &g.within_id),
            IntervalKind::Min => {
                let b = s.bounds[iv.slot.unwrap()];
                shed = shed + (iv.demand - kw) * g.time_interval_size;
                if iv.demand > b {
                    (b, &g.exceed_id)
                } else {
                    (iv.demand, &g.within_id)
                }
            }
        };
        let diff = (kw - expected).abs();
        if diff > threshold(kw, expected, rel) {
            push(id, Some(iv.time()), Some(iv.period()), -diff);
        }
    }
    if !ge(g.budget, shed) {
        push("budget", None, None, g.budget - shed);
    }
    let charged = g.rate * s.ppsd.iter().fold(T::zero(), |a, &b| a + b);
    let diff = (charged - s.objective).abs();
    if diff > threshold(charged, s.objective, rel) {
        push("objective", None, None, -diff);
    }
    CheckReport { violations: out }
}
