#![allow(dead_code)]

use chrono::NaiveDate;
use mtsa::compiler::{compile_event, ground, Catalog, DataStore, GroundConfig, GroundInstance, PEInstance};
use mtsa::dialect::parse_script;
use mtsa::timeseries::{CalendarRow, CalendarTable, TimeSeries};
use mtsa::{PeriodIndex, Scalar, TimeIndex};

pub const GMU_SCRIPT: &str = include_str!("../../../../scripts/gmu.mtsa");
pub const EVENT: &str = "LearnPeakDemandBoundParameter";
pub const MONITOR_VIEW: &str = "ELS_Monitoring_Recommendation";
pub const DEMAND: &str = "ElectricPowerDemand";
pub const ACTION: &str = "The Electric Power Demand Greater Than The Peak Demand Bound. \
                          The Electric Load Shedding Is Recommended.";

pub const TINY_DEMAND: [(i64, f64); 7] = [(-2, 10.0), (-1, 8.0), (0, 12.0), (1, 10.0), (2, 14.0), (3, 9.0), (4, 11.0)];

pub fn catalog() -> Catalog {
    Catalog::from_statements(&parse_script(GMU_SCRIPT).expect("shipped script parses"))
}

pub fn instance() -> PEInstance {
    compile_event(&catalog(), EVENT).expect("shipped event compiles")
}

/// Calendar rows that share one summer weekday at 11:00, with the given periods.
pub fn uniform_calendar(periods: &[(i64, i64)]) -> CalendarTable {
    CalendarTable::from_rows(
        periods
            .iter()
            .map(|&(t, p)| CalendarRow {
                time: TimeIndex(t),
                pay_period: PeriodIndex(p),
                year: 2012,
                month: 7,
                day: 3,
                hour: 11,
                week_day: 2,
            })
            .collect(),
    )
}

pub fn tiny_calendar() -> CalendarTable {
    uniform_calendar(&[(-2, 0), (-1, 0), (0, 0), (1, 1), (2, 1), (3, 2), (4, 2)])
}

pub fn ground_with<T: Scalar>(cal: CalendarTable, demand: &[(i64, f64)], budget: f64) -> GroundInstance<T> {
    let series = TimeSeries::from_values(DEMAND, demand.iter().map(|&(t, v)| (t, T::lit(v))));
    let store = DataStore::new(cal).with_series(series);
    let cfg = GroundConfig { annual_bound: budget, ..GroundConfig::default() };
    ground(&instance(), &store, &cfg).expect("fixture grounds")
}

pub fn tiny(budget: f64) -> GroundInstance<f64> {
    ground_with(tiny_calendar(), &TINY_DEMAND, budget)
}

pub fn gmu_calendar() -> CalendarTable {
    let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    CalendarTable::hourly_monthly(start, 8760, 17520)
}

/// A small random instance: at most one past period, one to three future
/// periods, at most twelve intervals, varied on-peak structure.
#[derive(Debug, Clone)]
pub struct Case {
    pub cal: CalendarTable,
    pub demand: Vec<(i64, f64)>,
}

impl Case {
    pub fn ground(&self, budget: f64) -> GroundInstance<f64> {
        ground_with(self.cal.clone(), &self.demand, budget)
    }

    pub fn scaled(&self, alpha: f64) -> Vec<(i64, f64)> {
        self.demand.iter().map(|&(t, d)| (t, d * alpha)).collect()
    }
}

pub fn small_case() -> impl proptest::strategy::Strategy<Value = Case> {
    use proptest::prelude::*;
    let past = prop::option::of(1usize..=3);
    let future = prop::collection::vec(1usize..=3, 1..=3);
    (past, future).prop_flat_map(|(past, future)| {
        let past = past.unwrap_or(0);
        let n = past + future.iter().sum::<usize>();
        let fields = prop::collection::vec(
            (prop::sample::select(vec![1u32, 5, 7, 8, 10]), 0u32..=6, prop::sample::select(vec![3u32, 8, 11, 21, 23])),
            n,
        );
        let demand = prop::collection::vec(0u32..=20, n);
        (Just(past), Just(future), fields, demand).prop_map(|(past, future, fields, demand)| {
            let mut periods = Vec::new();
            for i in 0..past {
                periods.push((i as i64 + 1 - past as i64, 0));
            }
            let mut t = 1;
            for (p, &len) in future.iter().enumerate() {
                for _ in 0..len {
                    periods.push((t, p as i64 + 1));
                    t += 1;
                }
            }
            let rows = periods
                .iter()
                .zip(&fields)
                .map(|(&(t, p), &(month, week_day, hour))| CalendarRow {
                    time: TimeIndex(t),
                    pay_period: PeriodIndex(p),
                    year: 2012,
                    month,
                    day: 1,
                    hour,
                    week_day,
                })
                .collect();
            let demand = periods.iter().zip(&demand).map(|(&(t, _), &d)| (t, d as f64)).collect();
            Case { cal: CalendarTable::from_rows(rows), demand }
        })
    })
}

fn on_peak_current(r: &CalendarRow) -> bool {
    let weekday = (1..=5).contains(&r.week_day);
    let summer = (6..=9).contains(&r.month);
    weekday && if summer { (10..=22).contains(&r.hour) } else { (7..=22).contains(&r.hour) }
}

fn on_peak_summer(r: &CalendarRow) -> bool {
    (1..=5).contains(&r.week_day) && (6..=9).contains(&r.month) && (10..=22).contains(&r.hour)
}

/// Hourly demand with daily, weekly and seasonal shape. Off-peak hours are
/// capped below the on-peak maximum of their month.
pub fn synthetic_demand(cal: &CalendarTable, seed: u64) -> Vec<(i64, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(i64, f64)> = cal
        .rows()
        .iter()
        .map(|r| {
            let seasonal = match r.month {
                6..=9 => 3500.0,
                1 | 2 | 12 => 1500.0,
                _ => 0.0,
            };
            let daytime = if (8..=20).contains(&r.hour) { 2500.0 } else { 0.0 };
            let weekday = if (1..=5).contains(&r.week_day) { 1200.0 } else { 0.0 };
            let v: f64 = 10000.0 + seasonal + daytime + weekday + rng.gen_range(-900.0..900.0);
            (r.time.0, (v * 10.0).round() / 10.0)
        })
        .collect();
    let mut peak = std::collections::BTreeMap::<i64, f64>::new();
    for (r, &(_, d)) in cal.rows().iter().zip(&out) {
        if on_peak_current(r) {
            let e = peak.entry(r.pay_period.0).or_insert(0.0);
            *e = e.max(d);
        }
    }
    for (r, (_, d)) in cal.rows().iter().zip(out.iter_mut()) {
        if !on_peak_current(r) {
            *d = d.min(peak[&r.pay_period.0] - 50.0);
        }
    }
    out
}

/// Zero-shed bound per future period, computed straight from the contract
/// terms: the month's on-peak maximum, or 90% of the summer on-peak
/// maximum over the eleven preceding months, whichever is larger.
pub fn contract_bounds(cal: &CalendarTable, demand: &[(i64, f64)]) -> std::collections::BTreeMap<PeriodIndex, f64> {
    let d: std::collections::HashMap<i64, f64> = demand.iter().copied().collect();
    cal.future_periods()
        .into_iter()
        .map(|p| {
            let mut v: f64 = 0.0;
            for r in cal.rows() {
                let q = r.pay_period.0;
                if q == p.0 && on_peak_current(r) {
                    v = v.max(d[&r.time.0]);
                }
                if q >= p.0 - 11 && q < p.0 && on_peak_summer(r) {
                    v = v.max(0.9 * d[&r.time.0]);
                }
            }
            (p, v)
        })
        .collect()
}
