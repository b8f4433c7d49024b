mod common;

use common::*;
use mtsa::solver::{brute_force_oracle, check_solution, solve_breakpoints, solve_zero_budget, SolverConfig};

#[test]
fn tiny_zero_budget() {
    let g = tiny(0.0);
    assert_eq!(g.periods.len(), 2);
    assert_eq!(g.intervals.len(), 7);
    let s = solve_zero_budget(&g).unwrap();
    assert_eq!(s.bounds, vec![14.0, 12.6]);
    assert!((s.objective - 216.0984).abs() < 1e-6, "{}", s.objective);
    assert!(check_solution(&g, &s, 1e-6).is_empty());
    let b = solve_breakpoints(&g, &SolverConfig::default()).unwrap();
    assert_eq!(b.bounds, s.bounds);
    let o = brute_force_oracle(&g, 0.1).unwrap();
    assert!((o.objective - 216.0984).abs() <= 8.124 * 0.1 * 2.0);
}

#[test]
fn tiny_unit_budget() {
    let g = tiny(1.0);
    let b = solve_breakpoints(&g, &SolverConfig::default()).unwrap();
    assert!(b.objective <= 200.6628 + 1e-3, "{:?}", b);
    assert!(check_solution(&g, &b, 1e-6).is_empty());
}
