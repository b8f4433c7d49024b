//! Symbolic parameter-estimation model: series `S`, parameter sets `P`,
//! global constraints `C_P`, monitoring constraints `C_M` and objective `O`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dialect::{CmpOp, Direction};
use crate::timeseries::{CalendarField, PeriodIndex, TimeIndex};

/// How a parameter reference is indexed at a binding `(t, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ParamIndex {
    /// `P[payPeriod(t)]`
    RowPeriod,
    /// `P[p]` for the quantified period `p`
    FreePeriod,
    /// `P[t]`
    RowTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "atom")]
pub enum Atom {
    /// The interval index `t` itself.
    Time,
    /// A calendar series at `t`, e.g. `month(t)`.
    Calendar { field: CalendarField },
    /// An input series value `S(t)`.
    Series { name: String },
    /// A decision parameter reference.
    Param { name: String, index: ParamIndex },
    /// The quantified period index `p` itself.
    Period,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Time => f.write_str("t"),
            Atom::Calendar { field } => write!(f, "{}(t)", field.column_name()),
            Atom::Series { name } => write!(f, "{name}(t)"),
            Atom::Param { name, index: ParamIndex::RowPeriod } => write!(f, "{name}[payPeriod(t)]"),
            Atom::Param { name, index: ParamIndex::FreePeriod } => write!(f, "{name}[p]"),
            Atom::Param { name, index: ParamIndex::RowTime } => write!(f, "{name}[t]"),
            Atom::Period => f.write_str("p"),
        }
    }
}

/// `sum(coef * atom) + constant`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub terms: Vec<(f64, Atom)>,
    pub constant: f64,
}

impl Linear {
    pub fn constant(c: f64) -> Self {
        Linear { terms: Vec::new(), constant: c }
    }

    pub fn atom(a: Atom) -> Self {
        Linear { terms: vec![(1.0, a)], constant: 0.0 }
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for (c, _) in &mut self.terms {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    pub fn plus(mut self, other: Linear) -> Self {
        for (c, a) in other.terms {
            match self.terms.iter_mut().find(|(_, b)| *b == a) {
                Some((acc, _)) => *acc += c,
                None => self.terms.push((c, a)),
            }
        }
        self.terms.retain(|(c, _)| *c != 0.0);
        self.constant += other.constant;
        self
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.terms.iter().map(|(_, a)| a)
    }

    pub fn eval(&self, env: &impl Env) -> Option<f64> {
        let mut acc = self.constant;
        for (c, a) in &self.terms {
            acc += c * env.atom(a)?;
        }
        Some(acc)
    }

    pub fn coefficient(&self, pred: impl Fn(&Atom) -> bool) -> f64 {
        self.terms.iter().filter(|(_, a)| pred(a)).map(|(c, _)| *c).sum()
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, a) in &self.terms {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1.0 {
                write!(f, "{a}")?;
            } else {
                write!(f, "{} * {a}", fmt_num(mag))?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", fmt_num(self.constant))
        } else if self.constant > 0.0 {
            write!(f, " + {}", fmt_num(self.constant))
        } else if self.constant < 0.0 {
            write!(f, " - {}", fmt_num(-self.constant))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: Linear,
    pub op: CmpOp,
    pub rhs: Linear,
}

impl Relation {
    /// `lhs - rhs`, so the relation reads `difference() op 0`.
    pub fn difference(&self) -> Linear {
        self.lhs.clone().plus(self.rhs.clone().scaled(-1.0))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    Rel(Relation),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn and(mut parts: Vec<Formula>) -> Formula {
        parts.retain(|p| *p != Formula::True);
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Three-valued evaluation: `None` when a needed value is unavailable
    /// and the result depends on it.
    pub fn eval(&self, env: &impl Env) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::Rel(r) => Some(r.op.holds(r.lhs.eval(env)?, r.rhs.eval(env)?)),
            Formula::And(parts) => {
                let mut unknown = false;
                for p in parts {
                    match p.eval(env) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown { None } else { Some(true) }
            }
            Formula::Or(parts) => {
                let mut unknown = false;
                for p in parts {
                    match p.eval(env) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown { None } else { Some(false) }
            }
        }
    }

    pub fn relations(&self) -> Vec<&Relation> {
        let mut out = Vec::new();
        self.walk(&mut |r| out.push(r));
        out
    }

    fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Relation)) {
        match self {
            Formula::True => {}
            Formula::Rel(r) => visit(r),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.walk(visit)),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        self.relations()
            .into_iter()
            .flat_map(|r| r.lhs.atoms().chain(r.rhs.atoms()))
            .collect()
    }

    pub fn map_atoms(&self, f: &impl Fn(&Atom) -> Atom) -> Formula {
        let map_lin = |l: &Linear| Linear {
            terms: l.terms.iter().map(|(c, a)| (*c, f(a))).collect(),
            constant: l.constant,
        };
        match self {
            Formula::True => Formula::True,
            Formula::Rel(r) => Formula::Rel(Relation { lhs: map_lin(&r.lhs), op: r.op, rhs: map_lin(&r.rhs) }),
            Formula::And(ps) => Formula::And(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Formula::Or(ps) => Formula::Or(ps.iter().map(|p| p.map_atoms(f)).collect()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, ps: &[Formula], sep: &str| -> fmt::Result {
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match p {
                    Formula::And(_) | Formula::Or(_) => write!(f, "({p})")?,
                    _ => write!(f, "{p}")?,
                }
            }
            Ok(())
        };
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::Rel(r) => write!(f, "{r}"),
            Formula::And(ps) => join(f, ps, " ∧ "),
            Formula::Or(ps) => join(f, ps, " ∨ "),
        }
    }
}

/// Values of atoms at one binding.
pub trait Env {
    fn atom(&self, atom: &Atom) -> Option<f64>;
}

/// Quantified domain of a period variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PeriodQuantifier {
    None,
    /// `p == payPeriod(t)`
    Row,
    /// `for all p in FuturePH`
    Future,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Quantifier {
    pub over_time: bool,
    pub period: PeriodQuantifier,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.over_time, self.period) {
            (true, PeriodQuantifier::None) => f.write_str("∀t∈TH"),
            (true, PeriodQuantifier::Row) => f.write_str("∀t∈TH, p=payPeriod(t)"),
            (true, PeriodQuantifier::Future) => f.write_str("∀t∈TH, p∈FuturePH"),
            (false, PeriodQuantifier::Future) | (false, PeriodQuantifier::Row) => f.write_str("∀p∈FuturePH"),
            (false, PeriodQuantifier::None) => f.write_str("∀"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConstraintClass {
    Global,
    Monitoring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum ConstraintBody {
    Atomic { formula: Formula },
    Implication { guard: Formula, consequent: Formula },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// `C1`, `C2`, ... in WITH-clause order.
    pub id: String,
    pub class: ConstraintClass,
    pub quantifier: Quantifier,
    pub body: ConstraintBody,
    /// Clause text as written in the event.
    pub source: String,
    /// View whose Indicator supplied the guard, for implications.
    pub guard_view: Option<String>,
}

impl Constraint {
    /// Truth value of the constraint at one binding; an implication with a
    /// false guard holds vacuously.
    pub fn holds(&self, env: &impl Env) -> Option<bool> {
        match &self.body {
            ConstraintBody::Atomic { formula } => formula.eval(env),
            ConstraintBody::Implication { guard, consequent } => match guard.eval(env) {
                Some(false) => Some(true),
                Some(true) => consequent.eval(env),
                None => match consequent.eval(env) {
                    Some(true) => Some(true),
                    _ => None,
                },
            },
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        match &self.body {
            ConstraintBody::Atomic { formula } => formula.atoms(),
            ConstraintBody::Implication { guard, consequent } => {
                let mut a = guard.atoms();
                a.extend(consequent.atoms());
                a
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            ConstraintBody::Atomic { formula } => write!(f, "{} = ({}): {}", self.id, self.quantifier, formula),
            ConstraintBody::Implication { guard, consequent } => {
                write!(f, "{} = ({}): ({}) → ({})", self.id, self.quantifier, guard, consequent)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ParamKey {
    PerPeriod,
    PerInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub name: String,
    pub key: ParamKey,
}

/// `direction sum over p in FuturePH of rate * param[p]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub direction: Direction,
    pub rate: f64,
    pub param: String,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PEInstance {
    pub event: String,
    pub series: Vec<String>,
    pub params: Vec<ParamSet>,
    pub global: Vec<Constraint>,
    pub monitoring: Vec<Constraint>,
    pub objective: ObjectiveSpec,
}

impl PEInstance {
    pub fn constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.global.iter().chain(&self.monitoring)
    }

    pub fn constraint(&self, id: &str) -> Option<&Constraint> {
        self.constraints().find(|c| c.id == id)
    }

    pub fn param(&self, name: &str) -> Option<&ParamSet> {
        self.params.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for PEInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "S = {{{}}}", self.series.join(", "))?;
        let params: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        writeln!(f, "P = {{{}}}", params.join(", "))?;
        for c in &self.global {
            writeln!(f, "C_P: {c}")?;
        }
        for c in &self.monitoring {
            writeln!(f, "C_M: {c}")?;
        }
        let o = &self.objective;
        write!(f, "O = {} Σ_{{p∈FuturePH}} {} * {}[p]", o.direction.keyword(), o.rate, o.param)
    }
}

/// Binding `(t, p)` with calendar/series data and a parameter assignment.
pub struct Binding<'a> {
    pub t: Option<TimeIndex>,
    pub p: Option<PeriodIndex>,
    pub calendar: Option<&'a crate::timeseries::CalendarRow>,
    pub series: &'a dyn Fn(&str, TimeIndex) -> Option<f64>,
    pub params: &'a dyn Fn(&str, ParamKeyValue) -> Option<f64>,
}

/// Concrete key of a parameter lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKeyValue {
    Period(PeriodIndex),
    Time(TimeIndex),
}

impl Env for Binding<'_> {
    fn atom(&self, atom: &Atom) -> Option<f64> {
        match atom {
            Atom::Time => self.t.map(|t| t.0 as f64),
            Atom::Calendar { field } => self.calendar.map(|r| r.field(*field) as f64),
            Atom::Series { name } => (self.series)(name, self.t?),
            Atom::Period => self.p.map(|p| p.0 as f64),
            Atom::Param { name, index } => {
                let key = match index {
                    ParamIndex::RowPeriod => ParamKeyValue::Period(self.calendar?.pay_period),
                    ParamIndex::FreePeriod => ParamKeyValue::Period(self.p?),
                    ParamIndex::RowTime => ParamKeyValue::Time(self.t?),
                };
                (self.params)(name, key)
            }
        }
    }
}
