use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dialect::{CmpOp, Direction};
use crate::scalar::Scalar;
use crate::timeseries::{validate_calendar, CalendarRow, CalendarTable, PeriodIndex, TimeIndex, TimeSeries};

use super::ir::*;
use super::GroundError;

/// Loaded calendar and input series.
#[derive(Debug, Clone, Default)]
pub struct DataStore<T> {
    pub calendar: CalendarTable,
    pub series: Vec<TimeSeries<T>>,
}

impl<T: Scalar> DataStore<T> {
    pub fn new(calendar: CalendarTable) -> Self {
        Self { calendar, series: Vec::new() }
    }

    pub fn with_series(mut self, s: TimeSeries<T>) -> Self {
        self.series.retain(|x| !x.name.eq_ignore_ascii_case(&s.name));
        self.series.push(s);
        self
    }

    pub fn series(&self, name: &str) -> Option<&TimeSeries<T>> {
        self.series.iter().find(|s| s.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GroundConfig {
    /// Shed energy allowed per year.
    pub annual_bound: f64,
    /// Hours per base interval.
    pub time_interval_size: f64,
    pub horizon_years: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        Self { annual_bound: 0.0, time_interval_size: 1.0, horizon_years: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum IntervalKind {
    /// `kW[t] = demand(t)`
    Fixed,
    /// `kW[t] = min(demand(t), bound[period(t)])`
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundInterval<T> {
    pub row: CalendarRow,
    pub demand: T,
    pub kind: IntervalKind,
    /// Index of the interval's period among the future periods.
    pub slot: Option<usize>,
}

impl<T> GroundInterval<T> {
    pub fn time(&self) -> TimeIndex {
        self.row.time
    }

    pub fn period(&self) -> PeriodIndex {
        self.row.pay_period
    }
}

/// `supply[slot] >= coef * kW[interval]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyRow<T> {
    /// Index into `GroundInstance::instance.global`.
    pub constraint: usize,
    pub slot: usize,
    pub interval: usize,
    pub coef: T,
}

/// Names of the parameter and series roles in the peak-demand structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleNames {
    pub demand: String,
    pub bound: String,
    pub supply: String,
    pub kw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundInstance<T> {
    pub event: String,
    pub names: RoleNames,
    pub calendar: CalendarTable,
    /// Every calendar interval, in time order.
    pub intervals: Vec<GroundInterval<T>>,
    /// Future periods; `bound` and `supply` have one variable per entry.
    pub periods: Vec<PeriodIndex>,
    pub supply_rows: Vec<SupplyRow<T>>,
    /// Constraint id of `bound[p] <= supply[p]`, when present.
    pub bound_le_supply: Option<String>,
    /// Constraint id of `bound[p] >= 0`, when present.
    pub bound_nonneg: Option<String>,
    /// Constraint ids of the exceedance and within-bound implications.
    pub exceed_id: String,
    pub within_id: String,
    pub rate: T,
    pub budget: T,
    pub annual_bound: T,
    pub horizon_years: T,
    pub time_interval_size: T,
    pub instance: PEInstance,
}

impl<T: Scalar> GroundInstance<T> {
    pub fn slot_of(&self, p: PeriodIndex) -> Option<usize> {
        self.periods.binary_search(&p).ok()
    }

    pub fn max_demand(&self) -> T {
        self.intervals.iter().fold(T::zero(), |m, i| m.max(i.demand))
    }

    /// Indices of future intervals with their period slot.
    pub fn min_records(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.intervals
            .iter()
            .enumerate()
            .filter(|(_, i)| i.kind == IntervalKind::Min)
            .map(|(k, i)| (k, i.slot.expect("future intervals have a slot")))
    }

    pub fn constraint_id(&self, row: &SupplyRow<T>) -> &str {
        &self.instance.global[row.constraint].id
    }

    pub fn interval_index(&self, t: TimeIndex) -> Option<usize> {
        self.intervals.binary_search_by_key(&t, |i| i.row.time).ok()
    }
}

struct Lookup<'a, T> {
    series: HashMap<String, &'a TimeSeries<T>>,
}

impl<T: Scalar> Lookup<'_, T> {
    fn value(&self, name: &str, t: TimeIndex) -> Option<f64> {
        self.series.get(&name.to_ascii_lowercase())?.get(t).map(Scalar::as_f64)
    }
}

fn binding<'a>(
    row: &'a CalendarRow,
    p: Option<PeriodIndex>,
    series: &'a dyn Fn(&str, TimeIndex) -> Option<f64>,
    params: &'a dyn Fn(&str, ParamKeyValue) -> Option<f64>,
) -> Binding<'a> {
    Binding { t: Some(row.time), p, calendar: Some(row), series, params }
}

fn no_params(_: &str, _: ParamKeyValue) -> Option<f64> {
    None
}

fn unsupported(id: &str, reason: impl Into<String>) -> GroundError {
    GroundError::UnsupportedConstraint { id: id.to_string(), reason: reason.into() }
}

fn single_relation<'f>(f: &'f Formula, id: &str) -> Result<&'f Relation, GroundError> {
    match f {
        Formula::Rel(r) => Ok(r),
        other => Err(unsupported(id, format!("expected a single comparison, found {other}"))),
    }
}

fn param_name(a: &Atom, index: ParamIndex) -> Option<&str> {
    match a {
        Atom::Param { name, index: i } if *i == index => Some(name),
        _ => None,
    }
}

/// `kW[t] = X` with X a per-period parameter (exceedance) or a series (within).
enum MinSide {
    Exceed { kw: String, bound: String },
    Within { kw: String, series: String },
}

fn min_side(c: &Constraint) -> Result<(MinSide, &Formula), GroundError> {
    let ConstraintBody::Implication { guard, consequent } = &c.body else {
        return Err(unsupported(&c.id, "monitoring constraints must be implications"));
    };
    let r = single_relation(consequent, &c.id)?;
    if r.op != CmpOp::Eq {
        return Err(unsupported(&c.id, "monitoring consequent must be an equality"));
    }
    let d = r.difference();
    if d.constant != 0.0 || d.terms.len() != 2 {
        return Err(unsupported(&c.id, format!("unrecognized consequent {r}")));
    }
    let (a, b) = (&d.terms[0], &d.terms[1]);
    let (kw, other) = if param_name(&a.1, ParamIndex::RowTime).is_some() { (a, b) } else { (b, a) };
    let kw_name = param_name(&kw.1, ParamIndex::RowTime)
        .ok_or_else(|| unsupported(&c.id, format!("consequent {r} does not assign a per-interval parameter")))?;
    if kw.0 != -other.0 {
        return Err(unsupported(&c.id, format!("consequent {r} is not an assignment")));
    }
    let side = match &other.1 {
        Atom::Param { name, index: ParamIndex::RowPeriod } => {
            MinSide::Exceed { kw: kw_name.to_string(), bound: name.clone() }
        }
        Atom::Series { name } => MinSide::Within { kw: kw_name.to_string(), series: name.clone() },
        a => return Err(unsupported(&c.id, format!("consequent assigns {a}"))),
    };
    Ok((side, guard))
}

/// Cross-checks the two guards at every interval against the min structure:
/// future intervals exceed iff demand > bound, past intervals never exceed.
fn check_min_guards<T: Scalar>(
    intervals: &[GroundInterval<T>],
    bound: &str,
    exceed: (&str, &Formula),
    within: (&str, &Formula),
    series: &dyn Fn(&str, TimeIndex) -> Option<f64>,
) -> Result<(), GroundError> {
    for iv in intervals {
        let d = iv.demand.as_f64();
        for v in [d - 1.0, d, d + 1.0] {
            let params = |name: &str, _: ParamKeyValue| name.eq_ignore_ascii_case(bound).then_some(v);
            let env = binding(&iv.row, None, series, &params);
            let (want_exceed, want_within) = match iv.kind {
                IntervalKind::Min => (d > v, d <= v),
                IntervalKind::Fixed => (false, true),
            };
            for ((id, g), want) in [(exceed, want_exceed), (within, want_within)] {
                match g.eval(&env) {
                    Some(got) if got == want => {}
                    Some(_) => {
                        return Err(unsupported(
                            id,
                            format!("guard at t={} does not match kW = min(demand, bound)", iv.row.time),
                        ))
                    }
                    None => return Err(unsupported(id, format!("guard undefined at t={}", iv.row.time))),
                }
            }
        }
    }
    Ok(())
}

/// Expands the symbolic model over the calendar.
pub fn ground<T: Scalar>(
    instance: &PEInstance,
    store: &DataStore<T>,
    config: &GroundConfig,
) -> Result<GroundInstance<T>, GroundError> {
    if instance.objective.direction == Direction::Maximize {
        return Err(GroundError::Maximize);
    }
    let finite_pos = |x: f64| x.is_finite() && x > 0.0;
    if !(config.annual_bound.is_finite() && config.annual_bound >= 0.0) {
        return Err(GroundError::Config(format!("annualBound must be >= 0, got {}", config.annual_bound)));
    }
    if !finite_pos(config.time_interval_size) {
        return Err(GroundError::Config(format!("timeIntervalSize must be > 0, got {}", config.time_interval_size)));
    }
    if !finite_pos(config.horizon_years) {
        return Err(GroundError::Config(format!("horizonYears must be > 0, got {}", config.horizon_years)));
    }
    let cal = &store.calendar;
    let report = validate_calendar(cal);
    if let Some(v) = report.violations.first() {
        return Err(GroundError::CalendarGap(v.to_string()));
    }
    let periods = cal.future_periods();
    if periods.is_empty() {
        return Err(GroundError::CalendarGap("no future pay periods; the objective range is empty".into()));
    }

    // Monitoring constraints must form kW = min(demand, bound).
    let mut exceed = None;
    let mut within = None;
    for c in &instance.monitoring {
        match min_side(c)? {
            (MinSide::Exceed { kw, bound }, g) if exceed.is_none() => exceed = Some((c.id.as_str(), kw, bound, g)),
            (MinSide::Within { kw, series }, g) if within.is_none() => within = Some((c.id.as_str(), kw, series, g)),
            _ => return Err(unsupported(&c.id, "duplicate monitoring constraint")),
        }
    }
    let (Some((ex_id, kw, bound, ex_guard)), Some((wi_id, kw2, demand_name, wi_guard))) = (exceed, within) else {
        let id = instance.monitoring.first().map(|c| c.id.as_str()).unwrap_or("C_M");
        return Err(unsupported(id, "monitoring constraints must define kW = min(demand, bound)"));
    };
    if !kw.eq_ignore_ascii_case(&kw2) {
        return Err(unsupported(wi_id, format!("assigns {kw2} but {ex_id} assigns {kw}")));
    }
    let supply = instance.objective.param.clone();
    for (id, name, key) in [(ex_id, &bound, ParamKey::PerPeriod), (ex_id, &kw, ParamKey::PerInterval)] {
        if instance.param(name).map(|p| p.key) != Some(key) {
            return Err(unsupported(id, format!("{name} is not a learned parameter of the expected kind")));
        }
    }
    if bound.eq_ignore_ascii_case(&supply) {
        return Err(unsupported(ex_id, "the bound and the charged supply demand must be distinct parameters"));
    }

    let lookup = Lookup {
        series: store.series.iter().map(|s| (s.name.to_ascii_lowercase(), s)).collect(),
    };
    for s in &instance.series {
        if lookup.series.get(&s.to_ascii_lowercase()).is_none() {
            return Err(GroundError::MissingSeries(s.clone()));
        }
    }
    let demand = lookup
        .series
        .get(&demand_name.to_ascii_lowercase())
        .ok_or_else(|| GroundError::MissingSeries(demand_name.clone()))?;
    let series_fn = |name: &str, t: TimeIndex| lookup.value(name, t);

    let mut intervals = Vec::with_capacity(cal.len());
    for row in cal.rows() {
        let d = demand
            .get(row.time)
            .ok_or_else(|| GroundError::CalendarGap(format!("series {demand_name} has no value at t={}", row.time)))?;
        let slot = periods.binary_search(&row.pay_period).ok();
        let kind = if row.time.is_future() { IntervalKind::Min } else { IntervalKind::Fixed };
        if kind == IntervalKind::Min && slot.is_none() {
            return Err(GroundError::CalendarGap(format!(
                "future interval t={} lies in non-future period {}",
                row.time, row.pay_period
            )));
        }
        intervals.push(GroundInterval { row: *row, demand: d, kind, slot });
    }
    check_min_guards(&intervals, &bound, (ex_id, ex_guard), (wi_id, wi_guard), &series_fn)?;

    let mut supply_rows = Vec::new();
    let mut bound_le_supply = None;
    let mut bound_nonneg = None;
    for (ci, c) in instance.global.iter().enumerate() {
        match &c.body {
            ConstraintBody::Atomic { formula } => {
                let r = single_relation(formula, &c.id)?;
                let d = r.difference();
                let cb = d.coefficient(|a| param_name(a, ParamIndex::FreePeriod).is_some_and(|n| n.eq_ignore_ascii_case(&bound)));
                let cs = d.coefficient(|a| param_name(a, ParamIndex::FreePeriod).is_some_and(|n| n.eq_ignore_ascii_case(&supply)));
                let known = d.terms.iter().all(|(_, a)| {
                    param_name(a, ParamIndex::FreePeriod)
                        .is_some_and(|n| n.eq_ignore_ascii_case(&bound) || n.eq_ignore_ascii_case(&supply))
                });
                // normalize to `cb * bound + cs * supply + k >= 0`
                let sign = match r.op {
                    CmpOp::Ge => 1.0,
                    CmpOp::Le => -1.0,
                    _ => return Err(unsupported(&c.id, format!("{r}: only <= and >= are supported"))),
                };
                let (cb, cs, k) = (cb * sign, cs * sign, d.constant * sign);
                if known && k == 0.0 && cb < 0.0 && cs == -cb {
                    bound_le_supply = Some(c.id.clone());
                } else if known && k == 0.0 && cb > 0.0 && cs == 0.0 {
                    bound_nonneg = Some(c.id.clone());
                } else {
                    return Err(unsupported(&c.id, format!("{r} is neither bound <= supply nor bound >= 0")));
                }
            }
            ConstraintBody::Implication { guard, consequent } => {
                let r = single_relation(consequent, &c.id)?;
                let d = r.difference();
                let sign = match r.op {
                    CmpOp::Ge => 1.0,
                    CmpOp::Le => -1.0,
                    _ => return Err(unsupported(&c.id, format!("{r}: only <= and >= are supported"))),
                };
                let mut supply_term = None;
                let mut kw_coef = None;
                for (coef, a) in &d.terms {
                    match a {
                        Atom::Param { name, index } if name.eq_ignore_ascii_case(&supply) => {
                            supply_term = Some((coef * sign, *index))
                        }
                        Atom::Param { name, index: ParamIndex::RowTime } if name.eq_ignore_ascii_case(&kw) => {
                            kw_coef = Some(coef * sign)
                        }
                        other => return Err(unsupported(&c.id, format!("{r}: unexpected term {other}"))),
                    }
                }
                let (Some((a, index)), Some(b)) = (supply_term, kw_coef) else {
                    return Err(unsupported(&c.id, format!("{r} is not supply >= c * kW")));
                };
                if d.constant != 0.0 || a <= 0.0 || b > 0.0 || index == ParamIndex::RowTime {
                    return Err(unsupported(&c.id, format!("{r} is not supply >= c * kW")));
                }
                let coef = T::lit(-b / a);
                if guard.atoms().iter().any(|a| matches!(a, Atom::Param { .. })) {
                    return Err(unsupported(&c.id, "guard depends on learned parameters"));
                }
                for (k, iv) in intervals.iter().enumerate() {
                    let mut test = |slot: usize| -> Result<(), GroundError> {
                        let env = binding(&iv.row, Some(periods[slot]), &series_fn, &no_params);
                        match guard.eval(&env) {
                            Some(true) => {
                                supply_rows.push(SupplyRow { constraint: ci, slot, interval: k, coef });
                                Ok(())
                            }
                            Some(false) => Ok(()),
                            None => Err(unsupported(&c.id, format!("guard undefined at t={}", iv.row.time))),
                        }
                    };
                    match index {
                        ParamIndex::RowPeriod => {
                            if let Some(slot) = iv.slot {
                                test(slot)?;
                            }
                        }
                        _ => (0..periods.len()).try_for_each(&mut test)?,
                    }
                }
            }
        }
    }

    Ok(GroundInstance {
        event: instance.event.clone(),
        names: RoleNames { demand: demand.name.clone(), bound, supply, kw },
        calendar: cal.clone(),
        intervals,
        periods,
        supply_rows,
        bound_le_supply,
        bound_nonneg,
        exceed_id: ex_id.to_string(),
        within_id: wi_id.to_string(),
        rate: T::lit(instance.objective.rate),
        budget: T::lit(config.annual_bound * config.horizon_years),
        annual_bound: T::lit(config.annual_bound),
        horizon_years: T::lit(config.horizon_years),
        time_interval_size: T::lit(config.time_interval_size),
        instance: instance.clone(),
    })
}
