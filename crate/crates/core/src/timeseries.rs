//! Time and period horizons, the calendar map, series storage and CSV ingestion.
//!
//! Time is split into integer base intervals: `t <= 0` is history, `t >= 1`
//! is the projected horizon. Every interval belongs to exactly one pay period
//! and the period map is monotone in `t`.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Base time interval index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeIndex(pub i64);

impl TimeIndex {
    pub fn is_past(self) -> bool {
        self.0 <= 0
    }

    pub fn is_future(self) -> bool {
        self.0 >= 1
    }
}

impl fmt::Display for TimeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Pay period index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeriodIndex(pub i64);

impl PeriodIndex {
    pub fn is_past(self) -> bool {
        self.0 <= 0
    }

    pub fn is_future(self) -> bool {
        self.0 >= 1
    }
}

impl fmt::Display for PeriodIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("time {0} is outside the calendar range")]
    OutOfRange(TimeIndex),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate key {0}")]
    DuplicateKey(i64),
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
}

/// Auxiliary calendar series addressable from the query language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CalendarField {
    PayPeriod,
    Year,
    Month,
    Day,
    Hour,
    WeekDay,
}

impl CalendarField {
    pub const ALL: [CalendarField; 6] = [
        CalendarField::PayPeriod,
        CalendarField::Year,
        CalendarField::Month,
        CalendarField::Day,
        CalendarField::Hour,
        CalendarField::WeekDay,
    ];

    /// Resolves one of the calendar table names (`PayPeriod`, `Year`, `Month`,
    /// `Day`, `WeekDay`, `Hour`), case-insensitively.
    pub fn from_table_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.table_name().eq_ignore_ascii_case(name))
    }

    pub fn table_name(self) -> &'static str {
        match self {
            CalendarField::PayPeriod => "PayPeriod",
            CalendarField::Year => "Year",
            CalendarField::Month => "Month",
            CalendarField::Day => "Day",
            CalendarField::Hour => "Hour",
            CalendarField::WeekDay => "WeekDay",
        }
    }

    /// Column name in the calendar CSV and in the OPL tuple.
    pub fn column_name(self) -> &'static str {
        match self {
            CalendarField::PayPeriod => "payPeriod",
            CalendarField::Year => "year",
            CalendarField::Month => "month",
            CalendarField::Day => "day",
            CalendarField::Hour => "hour",
            CalendarField::WeekDay => "weekDay",
        }
    }
}

/// One calendar row. `week_day` is 0 = Sunday .. 6 = Saturday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalendarRow {
    pub time: TimeIndex,
    pub pay_period: PeriodIndex,
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub week_day: u32,
}

impl CalendarRow {
    pub fn field(&self, field: CalendarField) -> i64 {
        match field {
            CalendarField::PayPeriod => self.pay_period.0,
            CalendarField::Year => self.year as i64,
            CalendarField::Month => self.month as i64,
            CalendarField::Day => self.day as i64,
            CalendarField::Hour => self.hour as i64,
            CalendarField::WeekDay => self.week_day as i64,
        }
    }
}

/// Per-interval calendar attributes, sorted by time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalendarTable {
    rows: Vec<CalendarRow>,
}

pub const CALENDAR_HEADER: &str = "time,payPeriod,year,month,day,hour,weekDay";
pub const SERIES_HEADER: &str = "time,value";
pub const PERIOD_PARAMETER_HEADER: &str = "time,period,value";

impl CalendarTable {
    /// Builds a table from rows in any order. Rows are not validated here;
    /// see [`validate_calendar`].
    pub fn from_rows(mut rows: Vec<CalendarRow>) -> Self {
        rows.sort_by_key(|r| r.time);
        Self { rows }
    }

    /// Hourly calendar with monthly pay periods. `t = 1` is the hour at
    /// `first_future`, pay period 1 is its month, and the table spans
    /// `past_hours` intervals before it and `future_hours` from it.
    pub fn hourly_monthly(first_future: NaiveDateTime, past_hours: i64, future_hours: i64) -> Self {
        let month_key = |d: &NaiveDateTime| d.year() as i64 * 12 + d.month0() as i64;
        let base_month = month_key(&first_future);
        let rows = (1 - past_hours..=future_hours)
            .map(|t| {
                let at = first_future + Duration::hours(t - 1);
                CalendarRow {
                    time: TimeIndex(t),
                    pay_period: PeriodIndex(month_key(&at) - base_month + 1),
                    year: at.year(),
                    month: at.month(),
                    day: at.day(),
                    hour: at.hour(),
                    week_day: at.weekday().num_days_from_sunday(),
                }
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[CalendarRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn range(&self) -> Option<(TimeIndex, TimeIndex)> {
        Some((self.rows.first()?.time, self.rows.last()?.time))
    }

    pub fn row(&self, t: TimeIndex) -> Option<&CalendarRow> {
        self.rows
            .binary_search_by_key(&t, |r| r.time)
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Distinct pay periods in increasing order.
    pub fn periods(&self) -> Vec<PeriodIndex> {
        let mut out: Vec<PeriodIndex> = self.rows.iter().map(|r| r.pay_period).collect();
        out.dedup();
        out.sort();
        out.dedup();
        out
    }

    pub fn future_periods(&self) -> Vec<PeriodIndex> {
        self.periods().into_iter().filter(|p| p.is_future()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 32);
        out.push_str(CALENDAR_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.time, r.pay_period, r.year, r.month, r.day, r.hour, r.week_day
            ));
        }
        out
    }
}

/// Pay period of interval `t`.
pub fn period_of(cal: &CalendarTable, t: TimeIndex) -> Result<PeriodIndex, SeriesError> {
    cal.row(t)
        .map(|r| r.pay_period)
        .ok_or(SeriesError::OutOfRange(t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum CalendarViolation {
    Gap { after: TimeIndex, next: TimeIndex },
    Duplicate { time: TimeIndex },
    NonMonotone { time: TimeIndex, previous: PeriodIndex, period: PeriodIndex },
    FieldRange { time: TimeIndex, field: CalendarField, value: i64 },
}

impl fmt::Display for CalendarViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalendarViolation::Gap { after, next } => {
                write!(f, "gap between t={after} and t={next}")
            }
            CalendarViolation::Duplicate { time } => write!(f, "t={time} appears more than once"),
            CalendarViolation::NonMonotone { time, previous, period } => write!(
                f,
                "pay period decreases at t={time} ({previous} -> {period})"
            ),
            CalendarViolation::FieldRange { time, field, value } => {
                write!(f, "t={time}: {} = {value} out of range", field.column_name())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<CalendarViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks contiguity, the functional time -> period map, period monotonicity
/// and field ranges. Never fails; the report carries every violation.
pub fn validate_calendar(cal: &CalendarTable) -> ValidationReport {
    let mut violations = Vec::new();
    for pair in cal.rows.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.time == prev.time {
            violations.push(CalendarViolation::Duplicate { time: cur.time });
            continue;
        }
        if cur.time.0 != prev.time.0 + 1 {
            violations.push(CalendarViolation::Gap { after: prev.time, next: cur.time });
        }
        if cur.pay_period < prev.pay_period {
            violations.push(CalendarViolation::NonMonotone {
                time: cur.time,
                previous: prev.pay_period,
                period: cur.pay_period,
            });
        }
    }
    for r in &cal.rows {
        let ranges = [
            (CalendarField::Month, 1, 12),
            (CalendarField::Day, 1, 31),
            (CalendarField::Hour, 0, 23),
            (CalendarField::WeekDay, 0, 6),
        ];
        for (field, lo, hi) in ranges {
            let v = r.field(field);
            if v < lo || v > hi {
                violations.push(CalendarViolation::FieldRange { time: r.time, field, value: v });
            }
        }
    }
    ValidationReport { violations }
}

/// A real-valued series over base intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub name: String,
    pub values: BTreeMap<TimeIndex, T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), values: BTreeMap::new() }
    }

    pub fn from_values(name: impl Into<String>, values: impl IntoIterator<Item = (i64, T)>) -> Self {
        Self {
            name: name.into(),
            values: values.into_iter().map(|(t, v)| (TimeIndex(t), v)).collect(),
        }
    }

    pub fn get(&self, t: TimeIndex) -> Option<T> {
        self.values.get(&t).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SERIES_HEADER);
        out.push('\n');
        for (t, v) in &self.values {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &str) -> Result<(), SeriesError> {
    let found = reader
        .headers()
        .map_err(|e| SeriesError::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found.eq_ignore_ascii_case(expected) {
        Ok(())
    } else {
        Err(SeriesError::Header { expected: expected.to_string(), found })
    }
}

fn parse_field<V: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<V, SeriesError> {
    s.parse()
        .map_err(|_| SeriesError::Parse { line, msg: format!("bad {what} `{s}`") })
}

fn record_line(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

fn parse_value<T: Scalar>(s: &str, line: usize) -> Result<T, SeriesError> {
    let v: f64 = parse_field(s, line, "value")?;
    if !v.is_finite() {
        return Err(SeriesError::Parse { line, msg: format!("non-finite value `{s}`") });
    }
    Ok(T::lit(v))
}

/// Parses a `time,value` CSV into a series. Duplicate times are rejected.
///
/// Text with no header line at all (only data rows) is accepted as well.
pub fn load_series<T: Scalar>(csv_text: &str, name: &str) -> Result<TimeSeries<T>, SeriesError> {
    let text = with_default_header(csv_text, SERIES_HEADER);
    let mut reader = csv_reader(&text);
    check_header(&mut reader, SERIES_HEADER)?;
    let mut series = TimeSeries::new(name);
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SeriesError::Parse { line: i + 2, msg: e.to_string() })?;
        let line = record_line(&rec, i + 2);
        if rec.len() != 2 {
            return Err(SeriesError::Parse { line, msg: format!("expected 2 fields, got {}", rec.len()) });
        }
        let t: i64 = parse_field(&rec[0], line, "time")?;
        let v = parse_value(&rec[1], line)?;
        if series.values.insert(TimeIndex(t), v).is_some() {
            return Err(SeriesError::DuplicateKey(t));
        }
    }
    Ok(series)
}

fn with_default_header<'a>(text: &'a str, header: &str) -> std::borrow::Cow<'a, str> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.starts_with(|c: char| c.is_ascii_alphabetic()) => text.into(),
        _ => format!("{header}\n{text}").into(),
    }
}

/// Parses a calendar CSV with header `time,payPeriod,year,month,day,hour,weekDay`.
pub fn load_calendar(csv_text: &str) -> Result<CalendarTable, SeriesError> {
    let mut reader = csv_reader(csv_text);
    check_header(&mut reader, CALENDAR_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SeriesError::Parse { line: i + 2, msg: e.to_string() })?;
        let line = record_line(&rec, i + 2);
        if rec.len() != 7 {
            return Err(SeriesError::Parse { line, msg: format!("expected 7 fields, got {}", rec.len()) });
        }
        rows.push(CalendarRow {
            time: TimeIndex(parse_field(&rec[0], line, "time")?),
            pay_period: PeriodIndex(parse_field(&rec[1], line, "payPeriod")?),
            year: parse_field(&rec[2], line, "year")?,
            month: parse_field(&rec[3], line, "month")?,
            day: parse_field(&rec[4], line, "day")?,
            hour: parse_field(&rec[5], line, "hour")?,
            week_day: parse_field(&rec[6], line, "weekDay")?,
        });
    }
    Ok(CalendarTable::from_rows(rows))
}

/// Past (`t <= 0`) and future (`t >= 1`) parts of a series domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Horizon {
    pub past: Vec<TimeIndex>,
    pub future: Vec<TimeIndex>,
}

pub fn horizon_of<T>(series: &TimeSeries<T>) -> Horizon {
    let (past, future) = series.values.keys().partition(|t| t.is_past());
    Horizon { past, future }
}

/// Learned decision parameter values, keyed by period or by interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "key", content = "values")]
pub enum ParameterValues<T> {
    PerPeriod(BTreeMap<PeriodIndex, T>),
    PerInterval(BTreeMap<TimeIndex, T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionParameterTable<T> {
    pub name: String,
    pub values: ParameterValues<T>,
}

impl<T: Scalar> DecisionParameterTable<T> {
    pub fn per_period(name: impl Into<String>, values: impl IntoIterator<Item = (PeriodIndex, T)>) -> Self {
        Self { name: name.into(), values: ParameterValues::PerPeriod(values.into_iter().collect()) }
    }

    pub fn per_interval(name: impl Into<String>, values: impl IntoIterator<Item = (TimeIndex, T)>) -> Self {
        Self { name: name.into(), values: ParameterValues::PerInterval(values.into_iter().collect()) }
    }

    pub fn period_value(&self, p: PeriodIndex) -> Option<T> {
        match &self.values {
            ParameterValues::PerPeriod(m) => m.get(&p).copied(),
            ParameterValues::PerInterval(_) => None,
        }
    }

    /// CSV form. Per-period tables are broadcast over every calendar interval
    /// of each period as `time,period,value`; per-interval tables are
    /// `time,value`.
    pub fn to_csv(&self, cal: &CalendarTable) -> String {
        let mut out = String::new();
        match &self.values {
            ParameterValues::PerPeriod(m) => {
                out.push_str(PERIOD_PARAMETER_HEADER);
                out.push('\n');
                for r in cal.rows() {
                    if let Some(v) = m.get(&r.pay_period) {
                        out.push_str(&format!("{},{},{}\n", r.time, r.pay_period, v));
                    }
                }
            }
            ParameterValues::PerInterval(m) => {
                out.push_str(SERIES_HEADER);
                out.push('\n');
                for (t, v) in m {
                    out.push_str(&format!("{t},{v}\n"));
                }
            }
        }
        out
    }

    /// Reads a `time,period,value` CSV back into a per-period table. All rows
    /// of one period must carry the same value.
    pub fn load_per_period(csv_text: &str, name: &str) -> Result<Self, SeriesError> {
        let mut reader = csv_reader(csv_text);
        check_header(&mut reader, PERIOD_PARAMETER_HEADER)?;
        let mut values = BTreeMap::new();
        let mut seen_times = std::collections::BTreeSet::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| SeriesError::Parse { line: i + 2, msg: e.to_string() })?;
            let line = record_line(&rec, i + 2);
            if rec.len() != 3 {
                return Err(SeriesError::Parse { line, msg: format!("expected 3 fields, got {}", rec.len()) });
            }
            let t: i64 = parse_field(&rec[0], line, "time")?;
            let p: i64 = parse_field(&rec[1], line, "period")?;
            let v: T = parse_value(&rec[2], line)?;
            if !seen_times.insert(t) {
                return Err(SeriesError::DuplicateKey(t));
            }
            match values.insert(PeriodIndex(p), v) {
                Some(prev) if prev != v => {
                    return Err(SeriesError::Parse {
                        line,
                        msg: format!("period {p} has conflicting values {prev} and {v}"),
                    })
                }
                _ => {}
            }
        }
        Ok(Self { name: name.to_string(), values: ParameterValues::PerPeriod(values) })
    }
}

/// Binary event indicator series.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeEventSeries {
    pub name: String,
    pub indicator: BTreeMap<TimeIndex, bool>,
}

impl TimeEventSeries {
    pub fn count_ones(&self) -> usize {
        self.indicator.values().filter(|v| **v).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: i64, p: i64) -> CalendarRow {
        CalendarRow {
            time: TimeIndex(t),
            pay_period: PeriodIndex(p),
            year: 2012,
            month: 7,
            day: 1,
            hour: 11,
            week_day: 2,
        }
    }

    /// Three intervals per period: period p covers t in [3p-2, 3p].
    fn three_per_period() -> CalendarTable {
        CalendarTable::from_rows((-8..=9).map(|t: i64| row(t, (t + 2).div_euclid(3))).collect())
    }

    #[test]
    fn period_lookup_matches_worked_examples() {
        let cal = three_per_period();
        assert_eq!(period_of(&cal, TimeIndex(2)), Ok(PeriodIndex(1)));
        assert_eq!(period_of(&cal, TimeIndex(3)), Ok(PeriodIndex(1)));
        assert_eq!(period_of(&cal, TimeIndex(0)), Ok(PeriodIndex(0)));
        assert_eq!(period_of(&cal, TimeIndex(8)), Ok(PeriodIndex(3)));
        assert_eq!(period_of(&cal, TimeIndex(-6)), Ok(PeriodIndex(-2)));
        assert_eq!(period_of(&cal, TimeIndex(10)), Err(SeriesError::OutOfRange(TimeIndex(10))));
        assert!(validate_calendar(&cal).is_valid());
    }

    #[test]
    fn monotonicity_violation_is_reported_at_the_drop() {
        let cal = CalendarTable::from_rows(vec![row(4, 1), row(5, 2), row(6, 1)]);
        let report = validate_calendar(&cal);
        assert_eq!(
            report.violations,
            vec![CalendarViolation::NonMonotone {
                time: TimeIndex(6),
                previous: PeriodIndex(2),
                period: PeriodIndex(1)
            }]
        );
    }

    #[test]
    fn field_range_duplicate_and_gap() {
        let mut bad = row(2, 1);
        bad.hour = 24;
        let cal = CalendarTable::from_rows(vec![row(0, 0), row(0, 0), bad]);
        let report = validate_calendar(&cal);
        assert!(report.violations.contains(&CalendarViolation::Duplicate { time: TimeIndex(0) }));
        assert!(report
            .violations
            .contains(&CalendarViolation::Gap { after: TimeIndex(0), next: TimeIndex(2) }));
        assert!(report.violations.contains(&CalendarViolation::FieldRange {
            time: TimeIndex(2),
            field: CalendarField::Hour,
            value: 24
        }));
    }

    #[test]
    fn load_series_examples() {
        let s: TimeSeries<f64> = load_series("time,value\n1,10.0\n2,14.0", "EPD").unwrap();
        assert_eq!(s.get(TimeIndex(1)), Some(10.0));
        assert_eq!(s.get(TimeIndex(2)), Some(14.0));
        assert_eq!(s.len(), 2);

        let empty: TimeSeries<f64> = load_series("time,value\n", "EPD").unwrap();
        assert!(empty.is_empty());
        let empty: TimeSeries<f64> = load_series("", "EPD").unwrap();
        assert!(empty.is_empty());

        assert_eq!(
            load_series::<f64>("1,10\n1,11", "EPD"),
            Err(SeriesError::DuplicateKey(1))
        );
        assert!(matches!(
            load_series::<f64>("time,value\n1,abc", "EPD"),
            Err(SeriesError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            load_series::<f64>("time,value\n1,NaN", "EPD"),
            Err(SeriesError::Parse { .. })
        ));
        assert!(matches!(
            load_series::<f64>("when,what\n1,2", "EPD"),
            Err(SeriesError::Header { .. })
        ));
    }

    #[test]
    fn horizon_partition() {
        let s = TimeSeries::from_values("x", [(-1, 8.0), (0, 12.0), (1, 10.0)]);
        let h = horizon_of(&s);
        assert_eq!(h.past, vec![TimeIndex(-1), TimeIndex(0)]);
        assert_eq!(h.future, vec![TimeIndex(1)]);

        let s = TimeSeries::from_values("x", [(3, 1.0f32), (4, 2.0)]);
        assert!(horizon_of(&s).past.is_empty());
        assert_eq!(horizon_of(&TimeSeries::<f64>::new("x")), Horizon::default());
    }

    #[test]
    fn calendar_csv_round_trip() {
        let cal = three_per_period();
        assert_eq!(load_calendar(&cal.to_csv()).unwrap(), cal);
    }

    #[test]
    fn hourly_monthly_layout() {
        let start = chrono::NaiveDate::from_ymd_opt(2012, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let cal = CalendarTable::hourly_monthly(start, 8760, 720);
        assert!(validate_calendar(&cal).is_valid());
        let first = cal.row(TimeIndex(-8759)).unwrap();
        assert_eq!((first.year, first.month, first.day, first.hour), (2011, 1, 1, 0));
        assert_eq!(first.pay_period, PeriodIndex(-11));
        assert_eq!(cal.row(TimeIndex(0)).unwrap().pay_period, PeriodIndex(0));
        let one = cal.row(TimeIndex(1)).unwrap();
        assert_eq!((one.pay_period, one.week_day), (PeriodIndex(1), 0)); // 2012-01-01 was a Sunday
    }

    #[test]
    fn period_parameter_csv_round_trip() {
        let cal = three_per_period();
        let table = DecisionParameterTable::per_period("PDB", [(PeriodIndex(1), 14.0), (PeriodIndex(2), 12.6)]);
        let csv = table.to_csv(&cal);
        assert!(csv.starts_with("time,period,value\n1,1,14\n"));
        assert_eq!(DecisionParameterTable::<f64>::load_per_period(&csv, "PDB").unwrap(), table);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn series_csv_round_trip(values in prop::collection::btree_map(-500i64..500, -1e6f64..1e6, 0..40)) {
            let s = TimeSeries { name: "s".into(), values: values.into_iter().map(|(t, v)| (TimeIndex(t), v)).collect() };
            let back: TimeSeries<f64> = load_series(&s.to_csv(), "s").unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn period_map_is_monotone(sizes in prop::collection::vec(1usize..6, 1..8), probe in any::<(u16, u16)>()) {
            let mut rows = Vec::new();
            let mut t = -10;
            for (p, n) in sizes.iter().enumerate() {
                for _ in 0..*n {
                    rows.push(CalendarRow { time: TimeIndex(t), pay_period: PeriodIndex(p as i64 - 2), year: 2012, month: 1, day: 1, hour: 0, week_day: 0 });
                    t += 1;
                }
            }
            let cal = CalendarTable::from_rows(rows);
            prop_assert!(validate_calendar(&cal).is_valid());
            let n = cal.len() as i64;
            let (a, b) = (probe.0 as i64 % n - 10, probe.1 as i64 % n - 10);
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(period_of(&cal, TimeIndex(lo)).unwrap() <= period_of(&cal, TimeIndex(hi)).unwrap());
        }

        #[test]
        fn horizon_is_disjoint_and_exhaustive(keys in prop::collection::btree_set(-100i64..100, 0..50)) {
            let s = TimeSeries::from_values("s", keys.iter().map(|t| (*t, 1.0f64)));
            let h = horizon_of(&s);
            prop_assert_eq!(h.past.len() + h.future.len(), keys.len());
            prop_assert!(h.past.iter().all(|t| t.0 <= 0));
            prop_assert!(h.future.iter().all(|t| t.0 >= 1));
        }
    }
}
