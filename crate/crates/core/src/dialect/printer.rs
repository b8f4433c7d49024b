use std::fmt::{self, Write};

use super::ast::*;

/// Canonical text for a statement, `;` included. Parsing the result yields a
/// structurally equal statement.
pub fn pretty_print(stmt: &Statement) -> String {
    stmt.to_string()
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::CreateTable(t) => write_table(f, t),
            Statement::CreateView(v) => write_view(f, v),
            Statement::CreateEvent(e) => write_event(f, e),
            Statement::Monitor { view } => write!(f, "MONITOR {view};"),
            Statement::Execute { event } => write!(f, "EXECUTE {event};"),
        }
    }
}

fn write_table(f: &mut fmt::Formatter<'_>, t: &CreateTable) -> fmt::Result {
    write!(f, "CREATE TABLE {} (", t.name)?;
    let mut parts: Vec<String> = t.columns.iter().map(|c| format!("{} {}", c.name, c.ty.keyword())).collect();
    if let Some((a, b)) = &t.unique_map {
        parts.push(format!("UNIQUE MAP({a}, {b})"));
    }
    for (i, p) in parts.iter().enumerate() {
        let sep = if i + 1 == parts.len() { "" } else { "," };
        write!(f, "\n    {p}{sep}")?;
    }
    f.write_str(");")
}

fn write_view(f: &mut fmt::Formatter<'_>, v: &CreateView) -> fmt::Result {
    write!(f, "CREATE VIEW {} AS (\n    SELECT ", v.name)?;
    for (i, item) in v.select.items.iter().enumerate() {
        if i > 0 {
            f.write_str(",\n        ")?;
        }
        match &item.expr {
            SelectExpr::Scalar(e) => write!(f, "{e}")?,
            SelectExpr::Case(c) => write!(f, "{c}")?,
        }
        if let Some(alias) = &item.alias {
            write!(f, " AS {alias}")?;
        }
    }
    write!(f, "\n    FROM {}", refs(&v.select.from))?;
    if !v.select.joins.is_empty() {
        write!(f, "\n    WHERE {}", joins(&v.select.joins))?;
    }
    f.write_str(");")
}

fn write_event(f: &mut fmt::Formatter<'_>, e: &CreateEvent) -> fmt::Result {
    writeln!(f, "CREATE EVENT {} (", e.name)?;
    let learn: Vec<String> = e.learn.iter().map(Ident::to_string).collect();
    writeln!(f, "    GC_LEARN {}", learn.join(", "))?;
    let o = &e.objective;
    writeln!(f, "    FOR {} SUM({}) AS {}", o.direction.keyword(), o.sum_of, o.alias)?;
    for (i, clause) in e.with.iter().enumerate() {
        f.write_str(if i == 0 { "    WITH " } else { "    AND " })?;
        match clause {
            WithClause::Inequality(c) => writeln!(f, "{c}")?,
            WithClause::Implication { guard, consequent } => {
                writeln!(f, "{guard} = '1' THEN {consequent}")?
            }
        }
    }
    write!(f, "    FROM {}", refs(&e.from))?;
    if !e.joins.is_empty() {
        write!(f, "\n    WHERE {}", joins(&e.joins))?;
    }
    f.write_str(");")
}

fn refs(from: &[TableRef]) -> String {
    from.iter()
        .map(|r| match &r.alias {
            Some(a) => format!("{} {}", r.name, a),
            None => r.name.to_string(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn joins(js: &[Join]) -> String {
    js.iter()
        .map(|j| format!("{} = {}", j.left, j.right))
        .collect::<Vec<_>>()
        .join(" AND ")
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.column),
            None => write!(f, "{}", self.column),
        }
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Column(_) | Expr::Number(_) | Expr::Str(_) => 4,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) => write!(f, "{c}"),
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Str(s) => f.write_str(&quote(s)),
            Expr::Neg(inner) => {
                f.write_char('-')?;
                // `--` would open a comment
                write_operand(f, inner, 4)
            }
            Expr::Add(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" + ")?;
                write_operand(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" - ")?;
                write_operand(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str(" * ")?;
                write_operand(f, b, 3)
            }
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Cmp(c) => write!(f, "{c}"),
            BoolExpr::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    match p {
                        BoolExpr::Cmp(_) => write!(f, "{p}")?,
                        _ => write!(f, "({p})")?,
                    }
                }
                Ok(())
            }
            BoolExpr::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    match p {
                        BoolExpr::Cmp(_) => write!(f, "{p}")?,
                        _ => write!(f, "({p})")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for CaseExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(CASE WHEN {} THEN {}", self.condition, quote(&self.then))?;
        if let Some(e) = &self.otherwise {
            write!(f, " ELSE {}", quote(e))?;
        }
        f.write_str(" END)")
    }
}
