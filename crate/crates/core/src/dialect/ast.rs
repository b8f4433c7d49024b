use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Identifier. Keeps the original spelling but compares case-insensitively.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ident(pub String);

impl Ident {
    pub fn new(s: impl Into<String>) -> Self {
        Ident(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is(&self, other: &str) -> bool {
        self.0.eq_ignore_ascii_case(other)
    }

    /// Lower-cased key for case-insensitive maps.
    pub fn key(&self) -> String {
        self.0.to_ascii_lowercase()
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ColumnType {
    HourlyInterval,
    DailyInterval,
    MonthlyInterval,
    QuarterlyInterval,
    YearlyInterval,
    Real,
    Integer,
}

impl ColumnType {
    pub const ALL: [ColumnType; 7] = [
        ColumnType::HourlyInterval,
        ColumnType::DailyInterval,
        ColumnType::MonthlyInterval,
        ColumnType::QuarterlyInterval,
        ColumnType::YearlyInterval,
        ColumnType::Real,
        ColumnType::Integer,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ColumnType::HourlyInterval => "HOURLY_INTERVAL",
            ColumnType::DailyInterval => "DAILY_INTERVAL",
            ColumnType::MonthlyInterval => "MONTHLY_INTERVAL",
            ColumnType::QuarterlyInterval => "QUARTERLY_INTERVAL",
            ColumnType::YearlyInterval => "YEARLY_INTERVAL",
            ColumnType::Real => "REAL",
            ColumnType::Integer => "INTEGER",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.keyword().eq_ignore_ascii_case(s))
    }

    pub fn is_interval(self) -> bool {
        !matches!(self, ColumnType::Real | ColumnType::Integer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: Ident,
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateTable {
    pub name: Ident,
    pub columns: Vec<ColumnDef>,
    /// `UNIQUE MAP(time, period)`: functional dependency between two key columns.
    pub unique_map: Option<(Ident, Ident)>,
}

impl CreateTable {
    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name.is(name))
    }
}

/// `qualifier.column` or a bare column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRef {
    pub qualifier: Option<Ident>,
    pub column: Ident,
}

impl ColumnRef {
    pub fn qualified(q: &str, c: &str) -> Self {
        ColumnRef { qualifier: Some(q.into()), column: c.into() }
    }
}

/// Scalar expressions; only linear forms are accepted by the parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Column(ColumnRef),
    Number(f64),
    Str(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Number(_) => true,
            Expr::Column(_) | Expr::Str(_) => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Normal form `sum(coef * column) + constant`. `None` when the expression
    /// is not linear or contains a string literal.
    pub fn linearize(&self) -> Option<LinearForm> {
        match self {
            Expr::Column(c) => Some(LinearForm { terms: vec![(1.0, c.clone())], constant: 0.0 }),
            Expr::Number(x) => Some(LinearForm { terms: vec![], constant: *x }),
            Expr::Str(_) => None,
            Expr::Neg(e) => Some(e.linearize()?.scale(-1.0)),
            Expr::Add(a, b) => Some(a.linearize()?.add(b.linearize()?)),
            Expr::Sub(a, b) => Some(a.linearize()?.add(b.linearize()?.scale(-1.0))),
            Expr::Mul(a, b) => {
                let (a, b) = (a.linearize()?, b.linearize()?);
                if a.terms.is_empty() {
                    Some(b.scale(a.constant))
                } else if b.terms.is_empty() {
                    Some(a.scale(b.constant))
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub terms: Vec<(f64, ColumnRef)>,
    pub constant: f64,
}

impl LinearForm {
    fn scale(mut self, k: f64) -> Self {
        for (c, _) in &mut self.terms {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    fn add(mut self, other: LinearForm) -> Self {
        for (c, col) in other.terms {
            match self.terms.iter_mut().find(|(_, existing)| *existing == col) {
                Some((acc, _)) => *acc += c,
                None => self.terms.push((c, col)),
            }
        }
        self.constant += other.constant;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    /// Operator with sides swapped: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
        }
    }

    /// Exact comparison, no epsilon.
    pub fn holds<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

/// Boolean combination of comparisons. `And`/`Or` are kept flat: a child of
/// `And` is never itself an `And`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoolExpr {
    Cmp(Comparison),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn and(parts: Vec<BoolExpr>) -> BoolExpr {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BoolExpr::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            BoolExpr::And(flat)
        }
    }

    pub fn or(parts: Vec<BoolExpr>) -> BoolExpr {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BoolExpr::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            BoolExpr::Or(flat)
        }
    }

    /// Top-level conjuncts (the expression itself unless it is an `And`).
    pub fn conjuncts(&self) -> &[BoolExpr] {
        match self {
            BoolExpr::And(parts) => parts,
            other => std::slice::from_ref(other),
        }
    }

    pub fn comparisons(&self) -> Vec<&Comparison> {
        let mut out = Vec::new();
        self.collect_comparisons(&mut out);
        out
    }

    fn collect_comparisons<'a>(&'a self, out: &mut Vec<&'a Comparison>) {
        match self {
            BoolExpr::Cmp(c) => out.push(c),
            BoolExpr::And(parts) | BoolExpr::Or(parts) => {
                for p in parts {
                    p.collect_comparisons(out);
                }
            }
        }
    }
}

/// `CASE WHEN condition THEN 'x' [ELSE 'y'] END`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseExpr {
    pub condition: BoolExpr,
    pub then: String,
    pub otherwise: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SelectExpr {
    Scalar(Expr),
    Case(CaseExpr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectItem {
    pub expr: SelectExpr,
    pub alias: Option<Ident>,
}

impl SelectItem {
    /// Output column name: the alias, or the column of a bare column reference.
    pub fn output_name(&self) -> Option<&Ident> {
        match (&self.alias, &self.expr) {
            (Some(a), _) => Some(a),
            (None, SelectExpr::Scalar(Expr::Column(c))) => Some(&c.column),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRef {
    pub name: Ident,
    pub alias: Option<Ident>,
}

impl TableRef {
    /// Name used to qualify columns of this source.
    pub fn binding(&self) -> &Ident {
        self.alias.as_ref().unwrap_or(&self.name)
    }
}

/// Equality join `a = b` in a WHERE clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Join {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Select {
    pub items: Vec<SelectItem>,
    pub from: Vec<TableRef>,
    pub joins: Vec<Join>,
}

impl Select {
    pub fn item(&self, name: &str) -> Option<&SelectItem> {
        self.items.iter().find(|i| i.output_name().is_some_and(|n| n.is(name)))
    }

    pub fn source(&self, binding: &str) -> Option<&TableRef> {
        self.from.iter().find(|r| r.binding().is(binding))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateView {
    pub name: Ident,
    pub select: Select,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Minimize => "MINIMIZE",
            Direction::Maximize => "MAXIMIZE",
        }
    }
}

/// `FOR MINIMIZE SUM(expr) AS alias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub direction: Direction,
    pub sum_of: Expr,
    pub alias: Ident,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WithClause {
    /// A plain inequality over event sources.
    Inequality(Comparison),
    /// `<guard>.Indicator = '1' THEN <consequent>`.
    Implication { guard: ColumnRef, consequent: Comparison },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateEvent {
    pub name: Ident,
    pub learn: Vec<Ident>,
    pub objective: Objective,
    pub with: Vec<WithClause>,
    pub from: Vec<TableRef>,
    pub joins: Vec<Join>,
}

impl CreateEvent {
    pub fn source(&self, binding: &str) -> Option<&TableRef> {
        self.from.iter().find(|r| r.binding().is(binding))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "statement", rename_all = "camelCase")]
pub enum Statement {
    CreateTable(CreateTable),
    CreateView(CreateView),
    CreateEvent(CreateEvent),
    Monitor { view: Ident },
    Execute { event: Ident },
}

impl Statement {
    pub fn kind(&self) -> &'static str {
        match self {
            Statement::CreateTable(_) => "CREATE TABLE",
            Statement::CreateView(_) => "CREATE VIEW",
            Statement::CreateEvent(_) => "CREATE EVENT",
            Statement::Monitor { .. } => "MONITOR",
            Statement::Execute { .. } => "EXECUTE",
        }
    }

    pub fn name(&self) -> &Ident {
        match self {
            Statement::CreateTable(t) => &t.name,
            Statement::CreateView(v) => &v.name,
            Statement::CreateEvent(e) => &e.name,
            Statement::Monitor { view } => view,
            Statement::Execute { event } => event,
        }
    }
}
