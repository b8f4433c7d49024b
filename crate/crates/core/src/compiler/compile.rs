use crate::dialect::{
    BoolExpr, CmpOp, ColumnRef, ColumnType, Comparison, CreateTable, CreateView, Expr, Ident, Join,
    SelectExpr, TableRef, WithClause,
};
use crate::timeseries::CalendarField;

use super::ir::*;
use super::{Catalog, CompileError};

const MAX_VIEW_DEPTH: usize = 16;

/// What a table contributes to the model.
#[derive(Debug, Clone, PartialEq)]
pub enum TableRole {
    /// One of the calendar tables; its non-time column is a calendar field.
    Calendar { field: CalendarField, time: Ident, value: Ident },
    /// Input series `(time, value)`.
    Series { time: Ident, value: Ident },
    /// Parameter keyed by period `(time, period, value)`.
    PeriodParam { time: Ident, period: Ident, value: Ident },
    /// Learned parameter keyed by interval `(time, value)`.
    IntervalParam { time: Ident, value: Ident },
}

impl TableRole {
    pub fn time_column(&self) -> &Ident {
        match self {
            TableRole::Calendar { time, .. }
            | TableRole::Series { time, .. }
            | TableRole::PeriodParam { time, .. }
            | TableRole::IntervalParam { time, .. } => time,
        }
    }
}

fn interval_rank(ty: ColumnType) -> usize {
    ColumnType::ALL.iter().position(|t| *t == ty).unwrap_or(usize::MAX)
}

/// Classifies a table. `learned` is whether the table appears in an event's
/// GC_LEARN list; outside an event it is `false`.
pub fn table_role(t: &CreateTable, learned: bool) -> Result<TableRole, CompileError> {
    let mut intervals: Vec<_> = t.columns.iter().filter(|c| c.ty.is_interval()).collect();
    intervals.sort_by_key(|c| interval_rank(c.ty));
    let Some(time) = intervals.first().map(|c| c.name.clone()) else {
        return Err(CompileError::UnsupportedViewShape(format!("table {} has no interval column", t.name)));
    };
    let value_col = t.columns.iter().find(|c| !c.ty.is_interval()).map(|c| c.name.clone());
    if !learned {
        if let Some(field) = CalendarField::from_table_name(t.name.as_str()) {
            let value = t.columns.iter().find(|c| c.name != time).map(|c| c.name.clone());
            let value = value.ok_or_else(|| {
                CompileError::UnsupportedViewShape(format!("calendar table {} has no value column", t.name))
            })?;
            return Ok(TableRole::Calendar { field, time, value });
        }
    }
    let value = value_col
        .ok_or_else(|| CompileError::UnsupportedViewShape(format!("table {} has no value column", t.name)))?;
    Ok(match (intervals.get(1), learned) {
        (Some(period), _) => TableRole::PeriodParam { time, period: period.name.clone(), value },
        (None, true) => TableRole::IntervalParam { time, value },
        (None, false) => TableRole::Series { time, value },
    })
}

enum SourceKind<'a> {
    Table { def: &'a CreateTable, role: TableRole },
    View { def: &'a CreateView, scope: Scope<'a> },
}

struct Source<'a> {
    binding: Ident,
    kind: SourceKind<'a>,
    /// Whether the source's time column is identified with the row time `t`.
    joined: bool,
}

#[derive(Default)]
struct Scope<'a> {
    sources: Vec<Source<'a>>,
}

impl<'a> Scope<'a> {
    fn locate(&self, col: &ColumnRef) -> Result<usize, CompileError> {
        match &col.qualifier {
            Some(q) => self
                .sources
                .iter()
                .position(|s| s.binding == *q)
                .ok_or_else(|| CompileError::UnresolvedReference(format!("source `{q}` in `{col}`"))),
            None if self.sources.len() == 1 => Ok(0),
            None => {
                let hits: Vec<usize> = (0..self.sources.len())
                    .filter(|i| self.has_column(*i, &col.column))
                    .collect();
                match hits.as_slice() {
                    [one] => Ok(*one),
                    _ => Err(CompileError::UnresolvedReference(format!("ambiguous or unknown column `{col}`"))),
                }
            }
        }
    }

    fn has_column(&self, i: usize, column: &Ident) -> bool {
        match &self.sources[i].kind {
            SourceKind::Table { def, .. } => def.column(column.as_str()).is_some(),
            SourceKind::View { def, .. } => def.select.item(column.as_str()).is_some(),
        }
    }

    fn is_time_column(&self, i: usize, column: &Ident) -> bool {
        match &self.sources[i].kind {
            SourceKind::Table { role, .. } => role.time_column() == column,
            SourceKind::View { def, .. } => column.is("time") && def.select.item("time").is_some(),
        }
    }

    /// Source index of a column reference when it names that source's time column.
    fn time_source(&self, e: &Expr) -> Option<usize> {
        let Expr::Column(c) = e else { return None };
        let i = self.locate(c).ok()?;
        self.is_time_column(i, &c.column).then_some(i)
    }

    fn is_time_join(&self, c: &Comparison) -> bool {
        c.op == CmpOp::Eq && self.time_source(&c.lhs).is_some() && self.time_source(&c.rhs).is_some()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

struct Resolver<'a> {
    catalog: &'a Catalog,
    learn: &'a [Ident],
}

impl<'a> Resolver<'a> {
    fn build_scope(
        &self,
        from: &[TableRef],
        joins: &[Join],
        conjuncts: &[&Comparison],
        row_time: Option<&ColumnRef>,
        depth: usize,
    ) -> Result<Scope<'a>, CompileError> {
        let mut scope = Scope::default();
        for r in from {
            let kind = if let Some(def) = self.catalog.table(r.name.as_str()) {
                let learned = self.learn.iter().any(|l| *l == def.name);
                SourceKind::Table { def, role: table_role(def, learned)? }
            } else if let Some(def) = self.catalog.view(r.name.as_str()) {
                SourceKind::View { def, scope: self.view_scope(def, depth + 1)? }
            } else {
                return Err(CompileError::UnresolvedReference(format!("table or view `{}`", r.name)));
            };
            scope.sources.push(Source { binding: r.binding().clone(), kind, joined: false });
        }
        if scope.sources.is_empty() {
            return Err(CompileError::UnsupportedViewShape("empty FROM list".into()));
        }

        let mut parent: Vec<usize> = (0..scope.sources.len()).collect();
        for j in joins {
            let (l, r) = (Expr::Column(j.left.clone()), Expr::Column(j.right.clone()));
            match (scope.time_source(&l), scope.time_source(&r)) {
                (Some(a), Some(b)) => {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
                _ => {
                    // resolve for a precise message
                    scope.locate(&j.left)?;
                    scope.locate(&j.right)?;
                    return Err(CompileError::UnsupportedViewShape(format!(
                        "join `{} = {}` is not on time columns",
                        j.left, j.right
                    )));
                }
            }
        }
        for c in conjuncts {
            if scope.is_time_join(c) {
                let a = scope.time_source(&c.lhs).unwrap();
                let b = scope.time_source(&c.rhs).unwrap();
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        let root = match row_time {
            Some(c) => scope.locate(c)?,
            None => 0,
        };
        let root = find(&mut parent, root);
        for i in 0..scope.sources.len() {
            scope.sources[i].joined = find(&mut parent, i) == root;
        }
        Ok(scope)
    }

    fn view_scope(&self, view: &'a CreateView, depth: usize) -> Result<Scope<'a>, CompileError> {
        if depth > MAX_VIEW_DEPTH {
            return Err(CompileError::UnsupportedViewShape(format!("view {} nests too deeply", view.name)));
        }
        let mut conjuncts = Vec::new();
        for item in &view.select.items {
            if let SelectExpr::Case(c) = &item.expr {
                for part in c.condition.conjuncts() {
                    if let BoolExpr::Cmp(cmp) = part {
                        conjuncts.push(cmp);
                    }
                }
            }
        }
        let row_time = match view.select.item("time").map(|i| &i.expr) {
            Some(SelectExpr::Scalar(Expr::Column(c))) => Some(c),
            _ => None,
        };
        self.build_scope(&view.select.from, &view.select.joins, &conjuncts, row_time, depth)
    }

    fn column(&self, scope: &Scope<'a>, col: &ColumnRef) -> Result<Linear, CompileError> {
        let src = &scope.sources[scope.locate(col)?];
        let c = &col.column;
        let unjoined = || {
            CompileError::UnsupportedViewShape(format!("`{col}`: source {} is not joined on time", src.binding))
        };
        let joined = |atom: Atom| if src.joined { Ok(Linear::atom(atom)) } else { Err(unjoined()) };
        let unknown = || CompileError::UnresolvedReference(format!("column `{col}`"));
        match &src.kind {
            SourceKind::Table { def, role } => {
                let name = def.name.to_string();
                match role {
                    TableRole::Calendar { field, time, value } => {
                        if c == time {
                            joined(Atom::Time)
                        } else if c == value {
                            joined(Atom::Calendar { field: *field })
                        } else {
                            Err(unknown())
                        }
                    }
                    TableRole::Series { time, value } => {
                        if c == time {
                            joined(Atom::Time)
                        } else if c == value {
                            joined(Atom::Series { name })
                        } else {
                            Err(unknown())
                        }
                    }
                    TableRole::IntervalParam { time, value } => {
                        if c == time {
                            joined(Atom::Time)
                        } else if c == value {
                            joined(Atom::Param { name, index: ParamIndex::RowTime })
                        } else {
                            Err(unknown())
                        }
                    }
                    TableRole::PeriodParam { time, period, value } => {
                        if c == time {
                            joined(Atom::Time)
                        } else if c == period {
                            Ok(Linear::atom(if src.joined {
                                Atom::Calendar { field: CalendarField::PayPeriod }
                            } else {
                                Atom::Period
                            }))
                        } else if c == value {
                            let index = if src.joined { ParamIndex::RowPeriod } else { ParamIndex::FreePeriod };
                            Ok(Linear::atom(Atom::Param { name, index }))
                        } else {
                            Err(unknown())
                        }
                    }
                }
            }
            SourceKind::View { def, scope: inner } => {
                if !src.joined {
                    return Err(unjoined());
                }
                match def.select.item(c.as_str()).map(|i| &i.expr) {
                    Some(SelectExpr::Scalar(e)) => self.expr(inner, e),
                    Some(SelectExpr::Case(_)) => Err(CompileError::UnsupportedGuardShape(format!(
                        "indicator column `{col}` used as a value"
                    ))),
                    None => Err(unknown()),
                }
            }
        }
    }

    fn expr(&self, scope: &Scope<'a>, e: &Expr) -> Result<Linear, CompileError> {
        let form = e
            .linearize()
            .ok_or_else(|| CompileError::UnsupportedGuardShape(format!("`{e}` is not a linear numeric expression")))?;
        let mut out = Linear::constant(form.constant);
        for (coef, col) in &form.terms {
            out = out.plus(self.column(scope, col)?.scaled(*coef));
        }
        Ok(out)
    }

    fn comparison(&self, scope: &Scope<'a>, c: &Comparison) -> Result<Relation, CompileError> {
        Ok(Relation { lhs: self.expr(scope, &c.lhs)?, op: c.op, rhs: self.expr(scope, &c.rhs)? })
    }

    /// Time-join equalities among top-level conjuncts bind the row and are
    /// dropped; everything else becomes part of the formula.
    fn condition(&self, scope: &Scope<'a>, b: &BoolExpr, top: bool) -> Result<Formula, CompileError> {
        match b {
            BoolExpr::Cmp(c) if top && scope.is_time_join(c) => Ok(Formula::True),
            BoolExpr::Cmp(c) => Ok(Formula::Rel(self.comparison(scope, c)?)),
            BoolExpr::And(parts) => Ok(Formula::and(
                parts.iter().map(|p| self.condition(scope, p, top)).collect::<Result<_, _>>()?,
            )),
            BoolExpr::Or(parts) => Ok(Formula::Or(
                parts.iter().map(|p| self.condition(scope, p, false)).collect::<Result<_, _>>()?,
            )),
        }
    }

    /// Guard formula behind `X.Indicator`, with the name of view `X`.
    fn indicator(&self, scope: &Scope<'a>, col: &ColumnRef) -> Result<(Formula, String), CompileError> {
        let src = &scope.sources[scope.locate(col)?];
        let SourceKind::View { def, scope: inner } = &src.kind else {
            return Err(CompileError::UnsupportedGuardShape(format!("`{col}` is not a view indicator")));
        };
        if !src.joined {
            return Err(CompileError::UnsupportedViewShape(format!("view {} is not joined on time", src.binding)));
        }
        let guard = view_case_guard(self, def, inner, &col.column)?;
        Ok((guard, def.name.to_string()))
    }
}

fn view_case_guard<'a>(
    r: &Resolver<'a>,
    def: &CreateView,
    scope: &Scope<'a>,
    column: &Ident,
) -> Result<Formula, CompileError> {
    match def.select.item(column.as_str()).map(|i| &i.expr) {
        Some(SelectExpr::Case(case)) if case.then == "1" => r.condition(scope, &case.condition, true),
        Some(SelectExpr::Case(case)) => Err(CompileError::UnsupportedGuardShape(format!(
            "{}.{column} yields '{}' rather than '1'",
            def.name, case.then
        ))),
        Some(SelectExpr::Scalar(_)) => Err(CompileError::UnsupportedGuardShape(format!(
            "{}.{column} is not a CASE indicator",
            def.name
        ))),
        None => Err(CompileError::UnresolvedReference(format!("column `{}.{column}`", def.name))),
    }
}

/// Guard formula of a view's `Indicator` column, resolved with tables taken
/// as given (no learned parameters).
pub fn indicator_guard(catalog: &Catalog, view: &str) -> Result<Formula, CompileError> {
    let def = catalog
        .view(view)
        .ok_or_else(|| CompileError::UnresolvedReference(format!("view `{view}`")))?;
    let r = Resolver { catalog, learn: &[] };
    let scope = r.view_scope(def, 0)?;
    view_case_guard(&r, def, &scope, &Ident::new("Indicator"))
}

/// Resolved monitoring view: the guard behind its indicator and, for an
/// action view, the literal action text.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorView {
    pub indicator_view: String,
    pub guard: Formula,
    pub action: Option<String>,
}

/// Resolves a MONITOR target. The view either carries an `Indicator` CASE
/// itself, or has a CASE testing `X.Indicator = '1'` of a view `X` it reads
/// from, whose THEN literal is the action.
pub fn resolve_monitor_view(catalog: &Catalog, view: &str) -> Result<MonitorView, CompileError> {
    let def = catalog
        .view(view)
        .ok_or_else(|| CompileError::UnresolvedReference(format!("view `{view}`")))?;
    for item in &def.select.items {
        let SelectExpr::Case(case) = &item.expr else { continue };
        let BoolExpr::Cmp(Comparison { lhs: Expr::Column(col), op: CmpOp::Eq, rhs: Expr::Str(one) }) =
            &case.condition
        else {
            continue;
        };
        if one != "1" || !col.column.is("Indicator") {
            continue;
        }
        let src = match &col.qualifier {
            Some(q) => def.select.source(q.as_str()),
            None if def.select.from.len() == 1 => def.select.from.first(),
            None => None,
        }
        .ok_or_else(|| CompileError::UnresolvedReference(format!("source of `{col}`")))?;
        if catalog.view(src.name.as_str()).is_none() {
            return Err(CompileError::UnsupportedViewShape(format!("`{col}` does not name a view")));
        }
        let guard = indicator_guard(catalog, src.name.as_str())?;
        return Ok(MonitorView { indicator_view: src.name.to_string(), guard, action: Some(case.then.clone()) });
    }
    if def.select.item("Indicator").is_some() {
        let guard = indicator_guard(catalog, view)?;
        return Ok(MonitorView { indicator_view: def.name.to_string(), guard, action: None });
    }
    Err(CompileError::UnsupportedViewShape(format!("view {view} has no Indicator column")))
}

fn is_row_dependent(a: &Atom) -> bool {
    !matches!(a, Atom::Period | Atom::Param { index: ParamIndex::FreePeriod, .. })
}

fn quantify(id: String, body: ConstraintBody, source: String, guard_view: Option<String>, params: &[ParamSet]) -> Constraint {
    let mut c = Constraint {
        id,
        class: ConstraintClass::Global,
        quantifier: Quantifier { over_time: false, period: PeriodQuantifier::None },
        body,
        source,
        guard_view,
    };
    // A constraint over per-period parameters only is quantified over periods.
    let per_period_only = {
        let atoms = c.atoms();
        !atoms.is_empty()
            && atoms.iter().all(|a| match a {
                Atom::Param { name, index: ParamIndex::RowPeriod } => params
                    .iter()
                    .any(|p| p.name.eq_ignore_ascii_case(name) && p.key == ParamKey::PerPeriod),
                _ => false,
            })
    };
    if per_period_only {
        let free = |a: &Atom| match a {
            Atom::Param { name, index: ParamIndex::RowPeriod } => {
                Atom::Param { name: name.clone(), index: ParamIndex::FreePeriod }
            }
            other => other.clone(),
        };
        c.body = match &c.body {
            ConstraintBody::Atomic { formula } => ConstraintBody::Atomic { formula: formula.map_atoms(&free) },
            ConstraintBody::Implication { guard, consequent } => ConstraintBody::Implication {
                guard: guard.map_atoms(&free),
                consequent: consequent.map_atoms(&free),
            },
        };
    }
    let atoms = c.atoms();
    let over_time = atoms.iter().any(|a| is_row_dependent(a));
    let period = if atoms.iter().any(|a| !is_row_dependent(a)) {
        PeriodQuantifier::Future
    } else if atoms.iter().any(|a| matches!(a, Atom::Param { index: ParamIndex::RowPeriod, .. })) {
        PeriodQuantifier::Row
    } else {
        PeriodQuantifier::None
    };
    c.quantifier = Quantifier { over_time, period };
    if let ConstraintBody::Implication { guard, .. } = &c.body {
        let has = |l: &Linear, f: fn(&Atom) -> bool| l.atoms().any(f);
        let series = |a: &Atom| matches!(a, Atom::Series { .. });
        let param = |a: &Atom| matches!(a, Atom::Param { .. });
        let event_shape = guard.relations().iter().any(|r| {
            (has(&r.lhs, series) && has(&r.rhs, param)) || (has(&r.lhs, param) && has(&r.rhs, series))
        });
        if event_shape {
            c.class = ConstraintClass::Monitoring;
        }
    }
    c
}

/// Lowers a learning event and the views it references to the symbolic model.
pub fn compile_event(catalog: &Catalog, name: &str) -> Result<PEInstance, CompileError> {
    let event = catalog
        .event(name)
        .ok_or_else(|| CompileError::UnresolvedReference(format!("event `{name}`")))?;
    let mut params = Vec::new();
    for l in &event.learn {
        let def = catalog
            .table(l.as_str())
            .ok_or_else(|| CompileError::UnresolvedReference(format!("learned table `{l}`")))?;
        let key = match table_role(def, true)? {
            TableRole::PeriodParam { .. } => ParamKey::PerPeriod,
            TableRole::IntervalParam { .. } => ParamKey::PerInterval,
            _ => unreachable!("learned tables are parameters"),
        };
        params.push(ParamSet { name: def.name.to_string(), key });
    }
    let r = Resolver { catalog, learn: &event.learn };
    let scope = r.build_scope(&event.from, &event.joins, &[], None, 0)?;

    let mut global = Vec::new();
    let mut monitoring = Vec::new();
    for (i, clause) in event.with.iter().enumerate() {
        let id = format!("C{}", i + 1);
        let c = match clause {
            WithClause::Inequality(cmp) => {
                let formula = Formula::Rel(r.comparison(&scope, cmp)?);
                quantify(id, ConstraintBody::Atomic { formula }, cmp.to_string(), None, &params)
            }
            WithClause::Implication { guard, consequent } => {
                let (g, view) = r.indicator(&scope, guard)?;
                let body = ConstraintBody::Implication {
                    guard: g,
                    consequent: Formula::Rel(r.comparison(&scope, consequent)?),
                };
                quantify(id, body, format!("{guard} = '1' THEN {consequent}"), Some(view), &params)
            }
        };
        match c.class {
            ConstraintClass::Global => global.push(c),
            ConstraintClass::Monitoring => monitoring.push(c),
        }
    }
    if global.is_empty() && monitoring.is_empty() {
        return Err(CompileError::UnsupportedViewShape(format!("event {name} has no constraints")));
    }

    let o = &event.objective;
    let bad_objective = || CompileError::NonLinearObjective(o.sum_of.to_string());
    let lin = r.expr(&scope, &o.sum_of).map_err(|e| match e {
        CompileError::UnsupportedGuardShape(_) => bad_objective(),
        other => other,
    })?;
    let objective = match lin.terms.as_slice() {
        [(rate, Atom::Param { name, index: ParamIndex::RowPeriod | ParamIndex::FreePeriod })]
            if lin.constant == 0.0
                && *rate > 0.0
                && params.iter().any(|p| p.name == *name && p.key == ParamKey::PerPeriod) =>
        {
            ObjectiveSpec { direction: o.direction, rate: *rate, param: name.clone(), alias: o.alias.to_string() }
        }
        _ => return Err(bad_objective()),
    };

    let mut series: Vec<String> = Vec::new();
    for c in global.iter().chain(&monitoring) {
        for a in c.atoms() {
            match a {
                Atom::Series { name } if !series.contains(name) => series.push(name.clone()),
                Atom::Param { name, .. } if !params.iter().any(|p| p.name == *name) => {
                    return Err(CompileError::UnresolvedReference(format!(
                        "parameter {name} in {} is not learned by the event",
                        c.id
                    )))
                }
                _ => {}
            }
        }
    }
    series.sort();
    Ok(PEInstance { event: event.name.to_string(), series, params, global, monitoring, objective })
}
