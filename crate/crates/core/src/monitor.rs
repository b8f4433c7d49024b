//! Applying a learned parameter to incoming demand and emitting
//! recommendations.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::compiler::{resolve_monitor_view, Atom, Catalog, CompileError, Formula, Linear, ParamIndex};
use crate::dialect::CmpOp;
use crate::scalar::Scalar;
use crate::timeseries::{period_of, CalendarTable, DecisionParameterTable, ParameterValues, PeriodIndex, TimeIndex};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("unsupported monitoring view: {0}")]
    UnsupportedViewShape(String),
    #[error("parameter {table} has no value for period {period}")]
    MissingParameter { table: String, period: PeriodIndex },
    #[error("time {0} is outside the calendar")]
    OutOfRange(TimeIndex),
    #[error("record {index} at time {time} does not follow time {previous}")]
    UnorderedStream { index: usize, time: TimeIndex, previous: TimeIndex },
    #[error("stream line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("writing the recommendation log: {0}")]
    Io(#[from] std::io::Error),
}

impl From<CompileError> for MonitorError {
    fn from(e: CompileError) -> Self {
        MonitorError::UnsupportedViewShape(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamRecord<T> {
    pub time: TimeIndex,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation<T> {
    pub time: TimeIndex,
    pub indicator: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    pub value: T,
    pub threshold: T,
}

/// `series(t) op parameter[period(t)]`, with the action to emit when it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringRule<T> {
    pub view: String,
    pub series: String,
    pub parameter: String,
    pub op: CmpOp,
    pub action: String,
    pub bounds: BTreeMap<PeriodIndex, T>,
    pub calendar: CalendarTable,
}

const DEFAULT_ACTION: &str = "Indicator raised.";

fn single_atom(l: &Linear) -> Option<&Atom> {
    match l.terms.as_slice() {
        [(c, a)] if *c == 1.0 && l.constant == 0.0 => Some(a),
        _ => None,
    }
}

/// What a MONITOR target compares: `series op parameter`, and the action
/// to emit when it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorShape {
    pub series: String,
    pub parameter: String,
    pub op: CmpOp,
    pub action: String,
}

pub fn monitor_shape(catalog: &Catalog, view: &str) -> Result<MonitorShape, MonitorError> {
    let mv = resolve_monitor_view(catalog, view)?;
    let Formula::Rel(r) = &mv.guard else {
        return Err(MonitorError::UnsupportedViewShape(format!(
            "{}: the indicator must be a single comparison, found {}",
            mv.indicator_view, mv.guard
        )));
    };
    let shape = match (single_atom(&r.lhs), single_atom(&r.rhs)) {
        (Some(Atom::Series { name: s }), Some(Atom::Param { name: p, index: ParamIndex::RowPeriod })) => {
            Some((s.clone(), p.clone(), r.op))
        }
        (Some(Atom::Param { name: p, index: ParamIndex::RowPeriod }), Some(Atom::Series { name: s })) => {
            Some((s.clone(), p.clone(), r.op.flip()))
        }
        _ => None,
    };
    let Some((series, parameter, op)) = shape else {
        return Err(MonitorError::UnsupportedViewShape(format!(
            "{}: expected series compared with a per-period parameter joined on time, found {r}",
            mv.indicator_view
        )));
    };
    // literals wrapped across lines read as single spaces
    let action = mv.action.as_deref().unwrap_or(DEFAULT_ACTION).split_whitespace().collect::<Vec<_>>().join(" ");
    Ok(MonitorShape { series, parameter, op, action })
}

/// Resolves a MONITOR target to a rule over the given parameter table.
/// The table must cover every future period of the calendar.
pub fn compile_monitor<T: Scalar>(
    catalog: &Catalog,
    view: &str,
    params: &DecisionParameterTable<T>,
    cal: &CalendarTable,
) -> Result<MonitoringRule<T>, MonitorError> {
    let MonitorShape { series, parameter, op, action } = monitor_shape(catalog, view)?;
    if !params.name.eq_ignore_ascii_case(&parameter) {
        return Err(MonitorError::UnsupportedViewShape(format!(
            "{view} compares against {parameter}, not {}",
            params.name
        )));
    }
    let bounds: BTreeMap<PeriodIndex, T> = match &params.values {
        ParameterValues::PerPeriod(m) => m.clone(),
        ParameterValues::PerInterval(_) => {
            return Err(MonitorError::UnsupportedViewShape(format!("{parameter} is not keyed by period")))
        }
    };
    for p in cal.future_periods() {
        if !bounds.contains_key(&p) {
            return Err(MonitorError::MissingParameter { table: parameter, period: p });
        }
    }
    Ok(MonitoringRule { view: view.to_string(), series, parameter, op, action, bounds, calendar: cal.clone() })
}

/// Evaluates one record. Comparison is exact, as written in the view.
pub fn step<T: Scalar>(rule: &MonitoringRule<T>, rec: &StreamRecord<T>) -> Result<Recommendation<T>, MonitorError> {
    let period = period_of(&rule.calendar, rec.time).map_err(|_| MonitorError::OutOfRange(rec.time))?;
    let threshold = *rule
        .bounds
        .get(&period)
        .ok_or_else(|| MonitorError::MissingParameter { table: rule.parameter.clone(), period })?;
    let fires = rule.op.holds(rec.value, threshold);
    Ok(Recommendation {
        time: rec.time,
        indicator: u8::from(fires),
        action: fires.then(|| rule.action.clone()),
        value: rec.value,
        threshold,
    })
}

/// Runs a rule over a time-ordered stream, writing one JSON line per record.
/// Nothing is written when the stream is out of order.
pub fn replay<T: Scalar>(
    rule: &MonitoringRule<T>,
    stream: &[StreamRecord<T>],
    log: &mut impl Write,
) -> Result<Vec<Recommendation<T>>, MonitorError> {
    for (i, w) in stream.windows(2).enumerate() {
        if w[1].time <= w[0].time {
            return Err(MonitorError::UnorderedStream { index: i + 1, time: w[1].time, previous: w[0].time });
        }
    }
    let out = stream.iter().map(|r| step(rule, r)).collect::<Result<Vec<_>, _>>()?;
    for rec in &out {
        serde_json::to_writer(&mut *log, rec).map_err(std::io::Error::from)?;
        log.write_all(b"\n")?;
    }
    Ok(out)
}

/// Incremental form of [`replay`] for records arriving one at a time.
pub struct Follower<'r, T> {
    rule: &'r MonitoringRule<T>,
    last: Option<TimeIndex>,
    seen: usize,
}

impl<'r, T: Scalar> Follower<'r, T> {
    pub fn new(rule: &'r MonitoringRule<T>) -> Self {
        Self { rule, last: None, seen: 0 }
    }

    pub fn push(&mut self, rec: &StreamRecord<T>) -> Result<Recommendation<T>, MonitorError> {
        if let Some(prev) = self.last {
            if rec.time <= prev {
                return Err(MonitorError::UnorderedStream { index: self.seen, time: rec.time, previous: prev });
            }
        }
        let out = step(self.rule, rec)?;
        self.last = Some(rec.time);
        self.seen += 1;
        Ok(out)
    }
}

/// Parses one `time,value` line; `None` for blank lines and a `time,value` header.
pub fn parse_stream_line<T: Scalar>(line: &str, line_no: usize) -> Result<Option<StreamRecord<T>>, MonitorError> {
    let line = line.trim();
    if line.is_empty() || line.eq_ignore_ascii_case("time,value") {
        return Ok(None);
    }
    let err = |msg: String| MonitorError::Parse { line: line_no, msg };
    let (t, v) = line.split_once(',').ok_or_else(|| err(format!("expected `time,value`, got `{line}`")))?;
    let time: i64 = t.trim().parse().map_err(|e| err(format!("time `{t}`: {e}")))?;
    let value: f64 = v.trim().parse().map_err(|e| err(format!("value `{v}`: {e}")))?;
    if !value.is_finite() {
        return Err(err(format!("value `{v}` is not finite")));
    }
    Ok(Some(StreamRecord { time: TimeIndex(time), value: T::lit(value) }))
}

pub fn parse_stream<T: Scalar>(text: &str) -> Result<Vec<StreamRecord<T>>, MonitorError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(r) = parse_stream_line(line, i + 1)? {
            out.push(r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(op: CmpOp) -> MonitoringRule<f64> {
        let cal = CalendarTable::hourly_monthly(
            chrono::NaiveDate::from_ymd_opt(2012, 7, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
            0,
            48,
        );
        MonitoringRule {
            view: "V".into(),
            series: "ElectricPowerDemand".into(),
            parameter: "PeakDemandBound".into(),
            op,
            action: "shed".into(),
            bounds: [(PeriodIndex(1), 17211.0)].into_iter().collect(),
            calendar: cal,
        }
    }

    fn rec(t: i64, v: f64) -> StreamRecord<f64> {
        StreamRecord { time: TimeIndex(t), value: v }
    }

    #[test]
    fn strict_guard_at_the_boundary() {
        let r = rule(CmpOp::Gt);
        let hit = step(&r, &rec(1, 17500.0)).unwrap();
        assert_eq!((hit.indicator, hit.action.as_deref()), (1, Some("shed")));
        let edge = step(&r, &rec(2, 17211.0)).unwrap();
        assert_eq!((edge.indicator, edge.action), (0, None));
        assert_eq!(step(&r, &rec(3, 0.0)).unwrap().indicator, 0);
        assert!(matches!(step(&r, &rec(99, 1.0)), Err(MonitorError::OutOfRange(_))));
    }

    #[test]
    fn replay_checks_order_before_writing() {
        let r = rule(CmpOp::Gt);
        let mut log = Vec::new();
        let err = replay(&r, &[rec(2, 1.0), rec(1, 1.0)], &mut log).unwrap_err();
        assert!(matches!(err, MonitorError::UnorderedStream { index: 1, .. }));
        assert!(log.is_empty());
        assert!(replay(&r, &[], &mut log).unwrap().is_empty());
        assert!(log.is_empty());
    }

    #[test]
    fn log_lines_omit_absent_actions() {
        let r = rule(CmpOp::Gt);
        let mut log = Vec::new();
        replay(&r, &[rec(1, 1.0), rec(2, 20000.0)], &mut log).unwrap();
        let text = String::from_utf8(log).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"time":1,"indicator":0,"value":1.0,"threshold":17211.0}"#);
        assert!(lines[1].contains(r#""action":"shed""#));
    }

    #[test]
    fn follower_rejects_repeats() {
        let r = rule(CmpOp::Gt);
        let mut f = Follower::new(&r);
        f.push(&rec(1, 1.0)).unwrap();
        assert!(matches!(f.push(&rec(1, 1.0)), Err(MonitorError::UnorderedStream { .. })));
    }

    #[test]
    fn stream_lines() {
        let s: Vec<StreamRecord<f64>> = parse_stream("time,value\n1, 2.5\n\n2,3\n").unwrap();
        assert_eq!(s, vec![rec(1, 2.5), rec(2, 3.0)]);
        assert!(parse_stream::<f64>("1;2").is_err());
    }
}
