//! Dense-grid enumeration, written independently of [`super::Evaluator`]
//! so that it can check the other solvers.

use crate::compiler::{GroundInstance, IntervalKind};
use crate::scalar::{threshold, Scalar};

use super::{SolveError, Solution, SolverConfig, Status};

/// [`brute_force_oracle_with`] at the default tolerance and grid cap.
pub fn brute_force_oracle<T: Scalar>(g: &GroundInstance<T>, grid_step: f64) -> Result<Solution<T>, SolveError> {
    let cfg = SolverConfig::default();
    brute_force_oracle_with(g, grid_step, cfg.tolerance, cfg.max_grid_points)
}

struct Tables<T> {
    grid: Vec<T>,
    /// `shed[q][k]`: shed of period q at grid level k.
    shed: Vec<Vec<T>>,
    /// `cross[p][q][k]`: largest weighted kW period q feeds into p's supply
    /// demand when q's bound is grid level k (`None` when q feeds nothing).
    cross: Vec<Vec<Option<Vec<T>>>>,
    /// Past rows and the zero floor.
    fixed: Vec<T>,
    bound_counts: bool,
    budget: T,
    rel_tol: T,
    rate: T,
}

impl<T: Scalar> Tables<T> {
    fn objective(&self, ks: &[usize]) -> T {
        let mut total = T::zero();
        for p in 0..ks.len() {
            let mut v = self.fixed[p];
            if self.bound_counts {
                v = v.max(self.grid[ks[p]]);
            }
            for (q, row) in self.cross[p].iter().enumerate() {
                if let Some(row) = row {
                    v = v.max(row[ks[q]]);
                }
            }
            total = total + v;
        }
        self.rate * total
    }
}

struct Search<'a, T> {
    t: &'a Tables<T>,
    ks: Vec<usize>,
    best: Option<(T, Vec<usize>)>,
}

impl<T: Scalar> Search<'_, T> {
    fn run(&mut self, p: usize, shed: T) {
        let t = self.t;
        if p == self.ks.len() {
            let obj = t.objective(&self.ks);
            let better = match &self.best {
                None => true,
                // visiting order is lexicographically descending, so the first
                // of near-equal objectives has the largest bounds
                Some((b, _)) => obj < *b - threshold(obj, *b, T::lit(1e-9)),
            };
            if better {
                self.best = Some((obj, self.ks.clone()));
            }
            return;
        }
        for k in (0..t.grid.len()).rev() {
            let total = shed + t.shed[p][k];
            if total > t.budget + threshold(total, t.budget, t.rel_tol) {
                break;
            }
            self.ks[p] = k;
            self.run(p + 1, total);
        }
    }
}

/// Exhaustive search over bounds on the grid `{0, step, 2 step, ...} ∪ {max demand}`
/// in every period. Ties go to the lexicographically largest bound vector.
pub fn brute_force_oracle_with<T: Scalar>(
    g: &GroundInstance<T>,
    grid_step: f64,
    tolerance: f64,
    max_points: f64,
) -> Result<Solution<T>, SolveError> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(SolveError::InvalidConfig(format!("gridStep must be > 0, got {grid_step}")));
    }
    let n = g.periods.len();
    let max_d = g.intervals.iter().fold(0f64, |m, iv| m.max(iv.demand.as_f64()));
    let mut grid: Vec<T> = Vec::new();
    let mut k = 0u64;
    loop {
        let v = k as f64 * grid_step;
        if v >= max_d {
            break;
        }
        grid.push(T::lit(v));
        k += 1;
        if grid.len() as f64 > max_points {
            break;
        }
    }
    grid.push(T::lit(max_d));
    let points = (grid.len() as f64).powi(n as i32);
    if points > max_points {
        return Err(SolveError::GridTooLarge { points, limit: max_points });
    }

    let dt = g.time_interval_size;
    let mut shed = vec![vec![T::zero(); grid.len()]; n];
    for iv in &g.intervals {
        if iv.kind != IntervalKind::Min {
            continue;
        }
        let q = iv.slot.unwrap();
        for (k, &v) in grid.iter().enumerate() {
            if iv.demand > v {
                shed[q][k] = shed[q][k] + (iv.demand - v) * dt;
            }
        }
    }
    let mut fixed = vec![T::zero(); n];
    let mut cross: Vec<Vec<Option<Vec<T>>>> = vec![vec![None; n]; n];
    for r in &g.supply_rows {
        let iv = &g.intervals[r.interval];
        match iv.kind {
            IntervalKind::Fixed => fixed[r.slot] = fixed[r.slot].max(r.coef * iv.demand),
            IntervalKind::Min => {
                let q = iv.slot.unwrap();
                let row = cross[r.slot][q].get_or_insert_with(|| vec![T::zero(); grid.len()]);
                for (k, &v) in grid.iter().enumerate() {
                    let kw = if iv.demand < v { iv.demand } else { v };
                    let w = r.coef * kw;
                    if w > row[k] {
                        row[k] = w;
                    }
                }
            }
        }
    }
    let tables = Tables {
        grid,
        shed,
        cross,
        fixed,
        bound_counts: g.bound_le_supply.is_some(),
        budget: g.budget,
        rel_tol: T::lit(tolerance),
        rate: g.rate,
    };
    let mut search = Search { t: &tables, ks: vec![0; n], best: None };
    search.run(0, T::zero());
    let (objective, ks) = search.best.expect("the top grid level sheds nothing");

    let bounds: Vec<T> = ks.iter().map(|&k| tables.grid[k]).collect();
    let kw: Vec<T> = g
        .intervals
        .iter()
        .map(|iv| match iv.kind {
            IntervalKind::Fixed => iv.demand,
            IntervalKind::Min => {
                let b = bounds[iv.slot.unwrap()];
                if iv.demand < b { iv.demand } else { b }
            }
        })
        .collect();
    let ppsd: Vec<T> = (0..n)
        .map(|p| {
            let mut v = tables.fixed[p];
            if tables.bound_counts {
                v = v.max(bounds[p]);
            }
            for (q, row) in tables.cross[p].iter().enumerate() {
                if let Some(row) = row {
                    v = v.max(row[ks[q]]);
                }
            }
            v
        })
        .collect();
    let shed_total = ks.iter().enumerate().fold(T::zero(), |a, (q, &k)| a + tables.shed[q][k]);
    Ok(Solution {
        periods: g.periods.clone(),
        bounds,
        ppsd,
        times: g.intervals.iter().map(|iv| iv.time()).collect(),
        kw,
        objective,
        shed_total,
        status: Status::Feasible,
    })
}
