use crate::compiler::GroundInstance;
use crate::scalar::{threshold, Scalar};

use super::exact::solve_zero_budget;
use super::{Evaluator, SolveError, Solution, SolverConfig, Status};

/// Lowest level `L >= 0` whose shed over `demands` is at most `energy`.
pub fn waterfill_level<T: Scalar>(demands: &[T], energy: T, time_interval_size: T) -> T {
    let mut desc: Vec<T> = demands.to_vec();
    desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let target = energy.max(T::zero()) / time_interval_size;
    let mut prefix = T::zero();
    for k in 0..desc.len() {
        prefix = prefix + desc[k];
        let next = desc.get(k + 1).copied().unwrap_or(T::zero()).max(T::zero());
        let level = (prefix - target) / T::lit((k + 1) as f64);
        if level >= next {
            return level.max(T::zero()).min(desc[0]);
        }
    }
    T::zero()
}

fn push_unique<T: Scalar>(v: &mut Vec<T>, x: T) {
    if !v.iter().any(|y| *y == x) {
        v.push(x);
    }
}

/// Candidate bound levels of one period: its distinct future demands and the
/// water-fill levels at which it alone consumes `q/Q` of the budget.
pub fn candidate_levels<T: Scalar>(ev: &Evaluator<'_, T>, slot: usize, steps: usize) -> Vec<T> {
    let g = ev.g;
    let demands = ev.future_demands(slot);
    let mut levels = Vec::new();
    for &d in demands {
        push_unique(&mut levels, d.max(T::zero()));
    }
    for q in 0..=steps {
        let energy = g.budget * T::lit(q as f64 / steps as f64);
        push_unique(&mut levels, waterfill_level(demands, energy, g.time_interval_size));
    }
    if levels.is_empty() {
        levels.push(T::zero());
    }
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels
}

/// True when `a` is lexicographically larger than `b`.
fn lex_greater<T: Scalar>(a: &[T], b: &[T]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

struct Best<T> {
    objective: T,
    bounds: Vec<T>,
}

impl<T: Scalar> Best<T> {
    /// Minimum objective, ties (relative 1e-12) to the larger bound vector.
    fn offer(&mut self, objective: T, bounds: &[T]) {
        if !self.objective.is_finite() {
            self.objective = objective;
            self.bounds = bounds.to_vec();
            return;
        }
        let eps = threshold(objective, self.objective, T::lit(1e-12));
        if objective < self.objective - eps
            || (objective <= self.objective + eps && lex_greater(bounds, &self.bounds))
        {
            self.objective = objective;
            self.bounds = bounds.to_vec();
        }
    }
}

fn enumerate<T: Scalar>(
    ev: &Evaluator<'_, T>,
    levels: &[Vec<T>],
    sheds: &[Vec<T>],
    slot: usize,
    shed: T,
    cur: &mut Vec<T>,
    best: &mut Best<T>,
) {
    if slot == levels.len() {
        if let Some(obj) = ev.feasible_objective(cur) {
            best.offer(obj, cur);
        }
        return;
    }
    for (k, &level) in levels[slot].iter().enumerate() {
        // levels descend, so shed only grows from here on
        let total = shed + sheds[slot][k];
        if !ev.within_budget(total) {
            break;
        }
        cur[slot] = level;
        enumerate(ev, levels, sheds, slot + 1, total, cur, best);
    }
}

fn golden_min<T: Scalar>(lo: T, hi: T, iters: usize, mut f: impl FnMut(T) -> Option<T>) -> Option<(T, T)> {
    let phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut best: Option<(T, T)> = None;
    let consider = |x: T, best: &mut Option<(T, T)>, f: &mut dyn FnMut(T) -> Option<T>| -> T {
        match f(x) {
            Some(v) => {
                if best.map_or(true, |(_, bv)| v < bv) {
                    *best = Some((x, v));
                }
                v
            }
            None => T::infinity(),
        }
    };
    consider(lo, &mut best, &mut f);
    consider(hi, &mut best, &mut f);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = consider(c, &mut best, &mut f);
    let mut fd = consider(d, &mut best, &mut f);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = consider(c, &mut best, &mut f);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = consider(d, &mut best, &mut f);
        }
    }
    best
}

/// Moves shed energy between pairs of periods (and into each period from
/// the unused budget), each move a golden-section search along the
/// water-fill curve. Returns whether anything improved.
fn refine<T: Scalar>(ev: &Evaluator<'_, T>, bounds: &mut Vec<T>, objective: &mut T, passes: usize) -> bool {
    let g = ev.g;
    let n = bounds.len();
    let mut improved_any = false;
    for _ in 0..passes {
        let mut improved = false;
        for p in 0..n {
            for q in 0..n {
                let alloc: Vec<T> = (0..n).map(|s| ev.slot_shed(s, bounds[s])).collect();
                let used = alloc.iter().fold(T::zero(), |a, &b| a + b);
                let free = (g.budget - used).max(T::zero());
                let (lo, hi) = if p == q {
                    (alloc[p], alloc[p] + free)
                } else {
                    (T::zero(), alloc[p] + alloc[q] + free)
                };
                if !(hi > lo) {
                    continue;
                }
                let total = hi;
                let mut trial = bounds.clone();
                let found = golden_min(lo, hi, 60, |x| {
                    trial[p] = waterfill_level(ev.future_demands(p), x, g.time_interval_size);
                    if p != q {
                        trial[q] = waterfill_level(ev.future_demands(q), total - x, g.time_interval_size);
                    }
                    ev.feasible_objective(&trial)
                });
                if let Some((x, v)) = found {
                    if v < *objective - threshold(v, *objective, T::lit(1e-12)) {
                        bounds[p] = waterfill_level(ev.future_demands(p), x, g.time_interval_size);
                        if p != q {
                            bounds[q] = waterfill_level(ev.future_demands(q), total - x, g.time_interval_size);
                        }
                        match ev.feasible_objective(bounds) {
                            Some(o) => {
                                *objective = o;
                                improved = true;
                            }
                            None => unreachable!("golden search returns feasible points"),
                        }
                    }
                }
            }
        }
        improved_any |= improved;
        if !improved {
            break;
        }
    }
    improved_any
}

/// Raises each bound to its supply demand while that costs nothing.
fn raise_to_supply<T: Scalar>(ev: &Evaluator<'_, T>, bounds: &mut [T], objective: &mut T) {
    for _ in 0..bounds.len().max(1) {
        let mut changed = false;
        for s in 0..bounds.len() {
            let target = ev.ppsd(s, bounds);
            if target <= bounds[s] {
                continue;
            }
            let old = bounds[s];
            bounds[s] = target;
            match ev.feasible_objective(bounds) {
                Some(o) if o <= *objective + threshold(o, *objective, T::lit(1e-12)) => {
                    *objective = o.min(*objective);
                    changed = true;
                }
                _ => bounds[s] = old,
            }
        }
        if !changed {
            break;
        }
    }
}

/// Exhaustive search over per-period candidate levels, then golden-section
/// refinement of the shed allocation.
pub fn solve_breakpoints<T: Scalar>(g: &GroundInstance<T>, cfg: &SolverConfig) -> Result<Solution<T>, SolveError> {
    cfg.validate()?;
    if g.budget == T::zero() {
        return solve_zero_budget(g);
    }
    let ev = Evaluator::new(g, cfg.tolerance);
    let n = g.periods.len();
    let levels: Vec<Vec<T>> = (0..n).map(|s| candidate_levels(&ev, s, cfg.waterfill_steps)).collect();
    let combos = levels.iter().fold(1f64, |acc, l| acc * l.len() as f64);
    if combos > cfg.max_exhaustive_combos as f64 {
        return Err(SolveError::ComboLimitExceeded { combos, limit: cfg.max_exhaustive_combos });
    }
    let sheds: Vec<Vec<T>> = levels
        .iter()
        .enumerate()
        .map(|(s, ls)| ls.iter().map(|&l| ev.slot_shed(s, l)).collect())
        .collect();
    let mut best = Best { objective: T::infinity(), bounds: vec![T::zero(); n] };
    let mut cur = vec![T::zero(); n];
    enumerate(&ev, &levels, &sheds, 0, T::zero(), &mut cur, &mut best);
    // the top level of each period sheds nothing, so a feasible point exists
    let Best { mut objective, mut bounds } = best;
    debug_assert!(objective.is_finite());
    refine(&ev, &mut bounds, &mut objective, cfg.refinement_iters);
    raise_to_supply(&ev, &mut bounds, &mut objective);
    let e = ev.evaluate(&bounds)?;
    Ok(Solution::from_evaluation(g, bounds, e, Status::Feasible))
}

/// Single-period moves to the adjacent candidate level below or above, or to
/// the lowest level the remaining budget allows; strict improvements only.
pub fn local_search<T: Scalar>(
    g: &GroundInstance<T>,
    seed: &Solution<T>,
    cfg: &SolverConfig,
) -> Result<Solution<T>, SolveError> {
    cfg.validate()?;
    let ev = Evaluator::new(g, cfg.tolerance);
    let seed_eval = ev.evaluate(&seed.bounds)?;
    if !seed_eval.feasible {
        let v = &seed_eval.violations[0];
        return Err(SolveError::InfeasibleSeed(format!("{} violated by {}", v.constraint, -v.slack)));
    }
    let n = g.periods.len();
    let levels: Vec<Vec<T>> = (0..n)
        .map(|s| {
            let mut l = candidate_levels(&ev, s, cfg.waterfill_steps);
            l.reverse();
            l
        })
        .collect();
    let mut cur = seed.bounds.clone();
    let mut cur_obj = seed_eval.objective;
    let mut moved = false;
    for _ in 0..cfg.local_search_iters {
        let used = ev.shed(&cur);
        let free = (g.budget - used).max(T::zero());
        let mut best: Option<(T, usize, T)> = None;
        for s in 0..n {
            let ls = &levels[s];
            let mut moves = Vec::with_capacity(3);
            if let Some(&lower) = ls.iter().rev().find(|&&l| l < cur[s]) {
                moves.push(lower);
            }
            if let Some(&higher) = ls.iter().find(|&&l| l > cur[s]) {
                moves.push(higher);
            }
            let binding = waterfill_level(ev.future_demands(s), ev.slot_shed(s, cur[s]) + free, g.time_interval_size);
            moves.push(binding);
            for m in moves {
                if m == cur[s] {
                    continue;
                }
                let old = cur[s];
                cur[s] = m;
                if let Some(o) = ev.feasible_objective(&cur) {
                    let better = o < cur_obj - threshold(o, cur_obj, T::lit(1e-12));
                    if better && best.map_or(true, |(bo, _, _)| o < bo) {
                        best = Some((o, s, m));
                    }
                }
                cur[s] = old;
            }
        }
        match best {
            Some((o, s, m)) => {
                cur[s] = m;
                cur_obj = o;
                moved = true;
            }
            None => break,
        }
    }
    if !moved {
        return Ok(seed.clone());
    }
    let e = ev.evaluate(&cur)?;
    Ok(Solution::from_evaluation(g, cur, e, Status::Feasible))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waterfill_levels() {
        let d = [10.0, 14.0];
        assert_eq!(waterfill_level(&d, 0.0, 1.0), 14.0);
        assert_eq!(waterfill_level(&d, 1.0, 1.0), 13.0);
        assert_eq!(waterfill_level(&d, 6.0, 1.0), 9.0);
        assert_eq!(waterfill_level(&d, 100.0, 1.0), 0.0);
        assert_eq!(waterfill_level(&d, 2.0, 2.0), 13.0);
    }

    #[test]
    fn golden_section_finds_interior_minimum() {
        let (x, v) = golden_min(0.0, 4.0, 80, |x: f64| Some((x - 1.3) * (x - 1.3) + 2.0)).unwrap();
        assert!((x - 1.3).abs() < 1e-6, "{x}");
        assert!((v - 2.0).abs() < 1e-9);
    }
}
