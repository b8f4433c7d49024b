use std::fmt::Write;

use crate::dialect::CmpOp;
use crate::scalar::Scalar;

use super::ground::{GroundInstance, IntervalKind};
use super::ir::*;
use super::EmitError;

/// OPL model text and its data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OplModel {
    pub model: String,
    pub data: String,
}

fn opl_name(table: &str) -> String {
    let mut c = table.chars();
    match c.next() {
        Some(first) => first.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opl_atom(a: &Atom) -> String {
    match a {
        Atom::Time => "i.pInterval".into(),
        Atom::Calendar { field } => format!("i.{}", field.column_name()),
        Atom::Series { name } => format!("{}[i]", opl_name(name)),
        Atom::Period => "p".into(),
        Atom::Param { name, index: ParamIndex::RowPeriod } => format!("{}[i.payPeriod]", opl_name(name)),
        Atom::Param { name, index: ParamIndex::FreePeriod } => format!("{}[p]", opl_name(name)),
        Atom::Param { name, index: ParamIndex::RowTime } => format!("{}[i]", opl_name(name)),
    }
}

fn opl_linear(l: &Linear) -> String {
    let mut out = String::new();
    for (k, (c, a)) in l.terms.iter().enumerate() {
        let (neg, mag) = (*c < 0.0, c.abs());
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        if mag != 1.0 {
            let _ = write!(out, "{} * ", num(mag));
        }
        out.push_str(&opl_atom(a));
    }
    if l.terms.is_empty() {
        out.push_str(&num(l.constant));
    } else if l.constant > 0.0 {
        let _ = write!(out, " + {}", num(l.constant));
    } else if l.constant < 0.0 {
        let _ = write!(out, " - {}", num(-l.constant));
    }
    out
}

fn opl_op(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        other => other.symbol(),
    }
}

fn opl_formula(f: &Formula) -> String {
    let child = |p: &Formula| match p {
        Formula::And(_) | Formula::Or(_) => format!("({})", opl_formula(p)),
        _ => opl_formula(p),
    };
    match f {
        Formula::True => "true".into(),
        Formula::Rel(r) => format!("{} {} {}", opl_linear(&r.lhs), opl_op(r.op), opl_linear(&r.rhs)),
        Formula::And(ps) => ps.iter().map(child).collect::<Vec<_>>().join(" && "),
        Formula::Or(ps) => ps.iter().map(child).collect::<Vec<_>>().join(" || "),
    }
}

fn disjunctions(f: &Formula, out: &mut Vec<String>) {
    match f {
        Formula::Or(_) => out.push(opl_formula(f)),
        Formula::And(ps) => ps.iter().for_each(|p| disjunctions(p, out)),
        _ => {}
    }
}

/// OPL model following the hand-written peak demand model, with the
/// constraint guards rendered from the compiled views.
pub fn emit_opl<T: Scalar>(g: &GroundInstance<T>) -> OplModel {
    let bound = opl_name(&g.names.bound);
    let supply = opl_name(&g.names.supply);
    let kw = opl_name(&g.names.kw);
    let demand = opl_name(&g.names.demand);
    let first = g.periods[0].0;
    let last = g.periods[g.periods.len() - 1].0;

    let mut m = String::new();
    m.push_str("/*********************************************\n");
    let _ = writeln!(m, " * OPL model for learning event {}", g.event);
    m.push_str(" *********************************************/\n");
    m.push_str("float timeIntervalSize = ...;\n");
    m.push_str("int nbPayPeriods = ...;\n");
    m.push_str("float annualBound = ...;\n");
    if first == 1 {
        m.push_str("range PayPeriods = 1..nbPayPeriods;\n\n");
    } else {
        let _ = writeln!(m, "range PayPeriods = {first}..{last};\n");
    }
    m.push_str("tuple powerInterval{\n");
    for f in ["pInterval", "payPeriod", "year", "month", "day", "hour", "weekDay"] {
        let _ = writeln!(m, "  int {f};");
    }
    m.push_str("}\n\n");
    m.push_str("{powerInterval} PowerIntervals = ...;\n");
    let _ = writeln!(m, "float {demand}[PowerIntervals] = ...;\n");
    let _ = writeln!(m, "dvar float+ {bound}[PayPeriods];");
    let _ = writeln!(m, "dvar float+ {kw}[PowerIntervals];");
    let _ = writeln!(m, "dvar float+ {supply}[PayPeriods];\n");
    let _ = writeln!(m, "pwlFunction kWfunction[i in PowerIntervals] = piecewise(1 -> {demand}[i]; 0);");
    let _ = writeln!(
        m,
        "dexpr float generationDemandCharge[p in PayPeriods] = {} * {supply}[p];",
        num(g.rate.as_f64())
    );
    m.push_str("dexpr float totalCharge = sum(p in PayPeriods) (generationDemandCharge[p]);\n\n");
    m.push_str("minimize totalCharge;\n\n");
    m.push_str("subject to {\n");
    let _ = writeln!(m, "  // {}: past intervals keep their demand", g.within_id);
    let _ = writeln!(m, "  forall(i in PowerIntervals : i.pInterval <= 0) {kw}[i] == {demand}[i];\n");
    let _ = writeln!(m, "  // {} and {}: kW = min(demand, bound) on future intervals", g.exceed_id, g.within_id);
    let _ = writeln!(
        m,
        "  forall(i in PowerIntervals : i.pInterval >= 1) {kw}[i] == kWfunction[i]({bound}[i.payPeriod]);\n"
    );
    if let Some(id) = &g.bound_le_supply {
        let _ = writeln!(m, "  // {id}");
        let _ = writeln!(m, "  forall (p in PayPeriods) {bound}[p] <= {supply}[p];\n");
    }
    if let Some(id) = &g.bound_nonneg {
        let _ = writeln!(m, "  // {id}: carried by the float+ domain of {bound}\n");
    }
    for (ci, c) in g.instance.global.iter().enumerate() {
        let ConstraintBody::Implication { guard, consequent } = &c.body else { continue };
        if !g.supply_rows.iter().any(|r| r.constraint == ci) {
            let _ = writeln!(m, "  // {}: guard never holds on this calendar\n", c.id);
            continue;
        }
        let row_period = c.quantifier.period == PeriodQuantifier::Row;
        let to_free = |a: &Atom| match a {
            Atom::Param { name, index: ParamIndex::RowPeriod } => {
                Atom::Param { name: name.clone(), index: ParamIndex::FreePeriod }
            }
            other => other.clone(),
        };
        let mut cond = opl_formula(guard);
        if row_period {
            cond = if matches!(guard, Formula::Or(_)) {
                format!("i.payPeriod == p && ({cond})")
            } else if *guard == Formula::True {
                "i.payPeriod == p".into()
            } else {
                format!("i.payPeriod == p && {cond}")
            };
        }
        let Formula::Rel(r) = consequent.map_atoms(&to_free) else { continue };
        let _ = writeln!(m, "  // {}: {}", c.id, c.source);
        let mut ors = Vec::new();
        disjunctions(guard, &mut ors);
        for d in ors {
            let _ = writeln!(m, "  // disjunctive condition kept as written: {d}");
        }
        m.push_str("  forall(p in PayPeriods)\n");
        let _ = writeln!(m, "    forall(i in PowerIntervals : {cond})");
        let _ = writeln!(m, "      {} {} {};\n", opl_linear(&r.lhs), opl_op(r.op), opl_linear(&r.rhs));
    }
    m.push_str("  // shed energy budget\n");
    let _ = writeln!(
        m,
        "  sum(i in PowerIntervals : i.pInterval >= 1) timeIntervalSize * ({demand}[i] - {kw}[i]) <= annualBound * {};",
        num(g.horizon_years.as_f64())
    );
    m.push_str("}\n");

    let mut d = String::new();
    let _ = writeln!(d, "timeIntervalSize = {};", num(g.time_interval_size.as_f64()));
    let _ = writeln!(d, "nbPayPeriods = {};", g.periods.len());
    let _ = writeln!(d, "annualBound = {};", num(g.annual_bound.as_f64()));
    d.push_str("PowerIntervals = {\n");
    for iv in &g.intervals {
        let r = &iv.row;
        let _ = writeln!(
            d,
            "  <{}, {}, {}, {}, {}, {}, {}>,",
            r.time, r.pay_period, r.year, r.month, r.day, r.hour, r.week_day
        );
    }
    d.push_str("};\n");
    let _ = write!(d, "{demand} = [");
    for (k, iv) in g.intervals.iter().enumerate() {
        if k > 0 {
            d.push_str(", ");
        }
        d.push_str(&num(iv.demand.as_f64()));
    }
    d.push_str("];\n");
    OplModel { model: m, data: d }
}

fn var_suffix(i: i64) -> String {
    if i < 0 {
        format!("n{}", -i)
    } else {
        i.to_string()
    }
}

fn lp_terms(terms: &[(f64, String)]) -> String {
    let mut out = String::new();
    for (k, (c, v)) in terms.iter().enumerate() {
        let (neg, mag) = (*c < 0.0, c.abs());
        match (k, neg) {
            (0, true) => out.push_str("- "),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let _ = write!(out, "{} {v}", num(mag));
    }
    out
}

/// Linear constraint row in CPLEX LP syntax.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub op: CmpOp,
    pub rhs: f64,
}

impl LpRow {
    fn render(&self) -> String {
        format!("{}: {} {} {}", self.name, lp_terms(&self.terms), self.op.symbol(), num(self.rhs))
    }
}

/// Big-M mixed-integer model in CPLEX LP format. Past `kW` are substituted
/// as constants; each future interval carries a binary `z_t` selecting the
/// bound (`z_t = 1`) or the demand branch of `kW = min(demand, bound)`.
pub fn emit_milp<T: Scalar>(g: &GroundInstance<T>, big_m: f64) -> Result<String, EmitError> {
    let max_demand = g.max_demand().as_f64();
    if !(big_m >= max_demand) {
        return Err(EmitError::BadBigM { m: big_m, max_demand });
    }
    let ppsd = |slot: usize| format!("ppsd_{}", var_suffix(g.periods[slot].0));
    let bound = |slot: usize| format!("bound_{}", var_suffix(g.periods[slot].0));
    let kw = |t: i64| format!("kw_{}", var_suffix(t));
    let z = |t: i64| format!("z_{}", var_suffix(t));
    let tis = g.time_interval_size.as_f64();

    let mut rows: Vec<LpRow> = Vec::new();
    if let Some(id) = &g.bound_le_supply {
        for s in 0..g.periods.len() {
            rows.push(LpRow {
                name: format!("{}_p{}", id.to_lowercase(), var_suffix(g.periods[s].0)),
                terms: vec![(1.0, bound(s)), (-1.0, ppsd(s))],
                op: CmpOp::Le,
                rhs: 0.0,
            });
        }
    }
    for r in &g.supply_rows {
        let iv = &g.intervals[r.interval];
        let t = iv.time().0;
        let name = format!(
            "{}_p{}_t{}",
            g.constraint_id(r).to_lowercase(),
            var_suffix(g.periods[r.slot].0),
            var_suffix(t)
        );
        let c = r.coef.as_f64();
        rows.push(match iv.kind {
            IntervalKind::Fixed => LpRow {
                name,
                terms: vec![(1.0, ppsd(r.slot))],
                op: CmpOp::Ge,
                rhs: c * iv.demand.as_f64(),
            },
            IntervalKind::Min => LpRow {
                name,
                terms: vec![(1.0, ppsd(r.slot)), (-c, kw(t))],
                op: CmpOp::Ge,
                rhs: 0.0,
            },
        });
    }
    let mut shed_rhs = 0.0;
    let mut budget_terms = Vec::new();
    let mut binaries = Vec::new();
    for (k, slot) in g.min_records() {
        let iv = &g.intervals[k];
        let t = iv.time().0;
        let d = iv.demand.as_f64();
        let s = var_suffix(t);
        rows.push(LpRow { name: format!("min_d_t{s}"), terms: vec![(1.0, kw(t))], op: CmpOp::Le, rhs: d });
        rows.push(LpRow {
            name: format!("min_b_t{s}"),
            terms: vec![(1.0, kw(t)), (-1.0, bound(slot))],
            op: CmpOp::Le,
            rhs: 0.0,
        });
        rows.push(LpRow {
            name: format!("min_zd_t{s}"),
            terms: vec![(1.0, kw(t)), (big_m, z(t))],
            op: CmpOp::Ge,
            rhs: d,
        });
        rows.push(LpRow {
            name: format!("min_zb_t{s}"),
            terms: vec![(1.0, kw(t)), (-1.0, bound(slot)), (-big_m, z(t))],
            op: CmpOp::Ge,
            rhs: -big_m,
        });
        shed_rhs += tis * d;
        budget_terms.push((tis, kw(t)));
        binaries.push(z(t));
    }
    // sum (d - kW) * tis <= B  <=>  sum tis * kW >= tis * sum d - B
    if !budget_terms.is_empty() {
        rows.push(LpRow { name: "budget".into(), terms: budget_terms, op: CmpOp::Ge, rhs: shed_rhs - g.budget.as_f64() });
    }

    let mut out = String::new();
    let _ = writeln!(out, "\\ peak demand model for event {}", g.event);
    out.push_str("Minimize\n");
    let obj: Vec<(f64, String)> = (0..g.periods.len()).map(|s| (g.rate.as_f64(), ppsd(s))).collect();
    let _ = writeln!(out, " obj: {}", lp_terms(&obj));
    out.push_str("Subject To\n");
    for r in &rows {
        let _ = writeln!(out, " {}", r.render());
    }
    out.push_str("Bounds\n");
    for s in 0..g.periods.len() {
        let _ = writeln!(out, " {} >= 0", bound(s));
        let _ = writeln!(out, " {} >= 0", ppsd(s));
    }
    for (k, _) in g.min_records() {
        let t = g.intervals[k].time().0;
        let _ = writeln!(out, " 0 <= {} <= {}", kw(t), num(g.intervals[k].demand.as_f64()));
    }
    out.push_str("Binaries\n");
    for b in &binaries {
        let _ = writeln!(out, " {b}");
    }
    out.push_str("End\n");
    Ok(out)
}

/// Reads the `Subject To` rows back from LP text produced by [`emit_milp`].
pub fn parse_lp_rows(text: &str) -> Result<Vec<LpRow>, String> {
    let mut rows = Vec::new();
    let mut in_rows = false;
    for line in text.lines() {
        let line = line.trim();
        match line {
            "Subject To" => {
                in_rows = true;
                continue;
            }
            "Bounds" | "Binaries" | "End" | "Minimize" => {
                in_rows = false;
                continue;
            }
            _ => {}
        }
        if !in_rows || line.is_empty() {
            continue;
        }
        let (name, body) = line.split_once(':').ok_or_else(|| format!("row without name: {line}"))?;
        let toks: Vec<&str> = body.split_whitespace().collect();
        let op_at = toks
            .iter()
            .position(|t| matches!(*t, "<=" | ">=" | "=" | "<" | ">"))
            .ok_or_else(|| format!("row without relation: {line}"))?;
        let op = match toks[op_at] {
            "<=" | "<" => CmpOp::Le,
            ">=" | ">" => CmpOp::Ge,
            _ => CmpOp::Eq,
        };
        let rhs: f64 = toks
            .get(op_at + 1)
            .ok_or_else(|| format!("row without rhs: {line}"))?
            .parse()
            .map_err(|e| format!("{line}: {e}"))?;
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut k = 0;
        while k < op_at {
            match toks[k] {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                coef => {
                    let c: f64 = coef.parse().map_err(|e| format!("{line}: {e}"))?;
                    let v = toks.get(k + 1).filter(|_| k + 1 < op_at).ok_or_else(|| format!("dangling coefficient: {line}"))?;
                    terms.push((sign * c, v.to_string()));
                    sign = 1.0;
                    k += 1;
                }
            }
            k += 1;
        }
        rows.push(LpRow { name: name.trim().to_string(), terms, op, rhs });
    }
    Ok(rows)
}
