use mtsa::dialect::*;
use proptest::prelude::*;

const CORPUS: [&str; 8] = [
    include_str!("fixtures/corpus/1_demand_table.mtsa"),
    include_str!("fixtures/corpus/2_bound_table.mtsa"),
    include_str!("fixtures/corpus/3_shedding_view.mtsa"),
    include_str!("fixtures/corpus/4_recommendation_view.mtsa"),
    include_str!("fixtures/corpus/5_charge_view.mtsa"),
    include_str!("fixtures/corpus/6_current_month_view.mtsa"),
    include_str!("fixtures/corpus/7_exceedance_view.mtsa"),
    include_str!("fixtures/corpus/8_learning_event.mtsa"),
];

fn ident() -> impl Strategy<Value = Ident> {
    prop::sample::select(vec!["time", "value", "EPD", "Pdb", "kw", "Indicator", "period", "x_1", "ViewA"])
        .prop_map(Ident::from)
}

fn column() -> impl Strategy<Value = ColumnRef> {
    (prop::option::of(ident()), ident()).prop_map(|(qualifier, column)| ColumnRef { qualifier, column })
}

fn number() -> impl Strategy<Value = Expr> {
    (0u32..10_000, 0u32..4).prop_map(|(n, d)| Expr::Number(n as f64 / 10f64.powi(d as i32)))
}

/// Linear expressions: every product has a constant factor.
fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![column().prop_map(Expr::Column), number()];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (number(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner, number()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        ]
    })
}

fn op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt])
}

fn comparison() -> impl Strategy<Value = Comparison> {
    (expr(), op(), expr()).prop_map(|(lhs, op, rhs)| Comparison { lhs, op, rhs })
}

/// Connectives alternate, as the parser flattens nested runs of one kind.
fn bool_expr() -> impl Strategy<Value = BoolExpr> {
    comparison().prop_map(BoolExpr::Cmp).prop_recursive(3, 16, 3, |inner| {
        let child = |want_and: bool, inner: BoxedStrategy<BoolExpr>| {
            inner.prop_filter("alternate connectives", move |b| match b {
                BoolExpr::And(_) => !want_and,
                BoolExpr::Or(_) => want_and,
                BoolExpr::Cmp(_) => true,
            })
        };
        prop_oneof![
            prop::collection::vec(child(true, inner.clone().boxed()), 2..4).prop_map(BoolExpr::And),
            prop::collection::vec(child(false, inner.boxed()), 2..4).prop_map(BoolExpr::Or),
        ]
    })
}

fn literal() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .']{0,24}"
}

fn select() -> impl Strategy<Value = Select> {
    let scalar = (expr(), prop::option::of(ident())).prop_map(|(e, alias)| SelectItem { expr: SelectExpr::Scalar(e), alias });
    let case = (bool_expr(), literal(), prop::option::of(literal()), ident()).prop_map(|(condition, then, otherwise, a)| {
        SelectItem { expr: SelectExpr::Case(CaseExpr { condition, then, otherwise }), alias: Some(a) }
    });
    let item = prop_oneof![scalar, case];
    let table = (ident(), prop::option::of(ident())).prop_map(|(name, alias)| TableRef { name, alias });
    let join = (column(), column()).prop_map(|(left, right)| Join { left, right });
    (prop::collection::vec(item, 1..4), prop::collection::vec(table, 1..4), prop::collection::vec(join, 0..3))
        .prop_map(|(items, from, joins)| Select { items, from, joins })
}

fn column_type() -> impl Strategy<Value = ColumnType> {
    prop::sample::select(ColumnType::ALL.to_vec())
}

fn statement() -> impl Strategy<Value = Statement> {
    let table = (ident(), prop::collection::vec(column_type(), 0..3), any::<bool>()).prop_map(|(name, extra, map)| {
        let mut columns = vec![ColumnDef { name: "time".into(), ty: ColumnType::HourlyInterval }];
        if map {
            columns.push(ColumnDef { name: "period".into(), ty: ColumnType::MonthlyInterval });
        }
        columns.extend(extra.into_iter().enumerate().map(|(i, ty)| ColumnDef { name: format!("c{i}").as_str().into(), ty }));
        let unique_map = map.then(|| ("time".into(), "period".into()));
        Statement::CreateTable(CreateTable { name, columns, unique_map })
    });
    let view = (ident(), select()).prop_map(|(name, select)| Statement::CreateView(CreateView { name, select }));
    let with = prop_oneof![
        comparison().prop_map(WithClause::Inequality),
        (ident(), comparison()).prop_map(|(view, consequent)| WithClause::Implication {
            guard: ColumnRef { qualifier: Some(view), column: "Indicator".into() },
            consequent,
        }),
    ];
    let event = (
        ident(),
        prop::collection::vec(ident(), 1..3),
        prop::sample::select(vec![Direction::Minimize, Direction::Maximize]),
        expr(),
        ident(),
        prop::collection::vec(with, 1..4),
        prop::collection::vec((ident(), prop::option::of(ident())), 1..3),
        prop::collection::vec((column(), column()), 0..3),
    )
        .prop_map(|(name, learn, direction, sum_of, alias, with, from, joins)| {
            Statement::CreateEvent(CreateEvent {
                name,
                learn,
                objective: Objective { direction, sum_of, alias },
                with,
                from: from.into_iter().map(|(name, alias)| TableRef { name, alias }).collect(),
                joins: joins.into_iter().map(|(left, right)| Join { left, right }).collect(),
            })
        });
    prop_oneof![
        table,
        view,
        event,
        ident().prop_map(|view| Statement::Monitor { view }),
        ident().prop_map(|event| Statement::Execute { event }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printed_statements_parse_back(s in statement()) {
        let text = pretty_print(&s);
        let back = parse_script(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, vec![s], "{}", text);
    }

    #[test]
    fn keyword_case_and_spacing_do_not_matter(i in 0usize..8, lower in any::<bool>(), pad in 1usize..4) {
        let base = parse_script(CORPUS[i]).unwrap();
        let spaced = CORPUS[i].split_whitespace().collect::<Vec<_>>().join(&" ".repeat(pad));
        // keywords only; identifiers and literals keep their case
        let recased = if lower { recase_keywords(&spaced) } else { spaced };
        let other = parse_script(&recased).unwrap();
        if i == 3 {
            // the action literal spans lines, so only its spacing changes
            prop_assert_eq!(other.len(), base.len());
        } else {
            prop_assert_eq!(other, base);
        }
    }
}

fn recase_keywords(text: &str) -> String {
    const KEYWORDS: [&str; 14] =
        ["CREATE", "TABLE", "VIEW", "SELECT", "FROM", "WHERE", "CASE", "WHEN", "THEN", "ELSE", "END", "AND", "OR", "AS"];
    text.split(' ')
        .map(|w| if KEYWORDS.contains(&w) { w.to_lowercase() } else { w.to_string() })
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn corpus_round_trips() {
    for (i, text) in CORPUS.iter().enumerate() {
        let stmts = parse_script(text).unwrap_or_else(|e| panic!("file {}: {e}", i + 1));
        let printed: String = stmts.iter().map(|s| pretty_print(s) + "\n").collect();
        assert_eq!(parse_script(&printed).unwrap(), stmts);
    }
}

#[test]
fn table_and_event_shapes() {
    let t = parse_script(CORPUS[0]).unwrap();
    let Statement::CreateTable(t) = &t[0] else { panic!() };
    assert!(t.name.is("ElectricPowerDemand"));
    assert_eq!(t.columns.iter().map(|c| c.ty).collect::<Vec<_>>(), vec![ColumnType::HourlyInterval, ColumnType::Real]);
    let b = parse_script(CORPUS[1]).unwrap();
    let Statement::CreateTable(b) = &b[0] else { panic!() };
    let (a, c) = b.unique_map.as_ref().unwrap();
    assert!(a.is("time") && c.is("period"));
    let underscored = CORPUS[1].replace("UNIQUE MAP", "UNIQUE_MAP");
    assert_eq!(parse_script(&underscored).unwrap(), parse_script(CORPUS[1]).unwrap());
}

#[test]
fn rejected_input() {
    assert!(matches!(parse_script("SELECT 'unterminated"), Err(DialectError::Lex { .. })));
    assert!(parse_script("MONITOR V").is_err());
    assert!(parse_script("CREATE VIEW V AS (SELECT a.time FROM A a WHERE a.x <> b.y);").is_err());
    assert!(parse_script("CREATE EVENT E (GC_LEARN P FOR MINIMIZE SUM(x.v) AS T WITH a.v >= 0 XOR b.v >= 0 FROM A a);").is_err());
    assert_eq!(parse_script("monitor v;").unwrap(), parse_script("MONITOR v;").unwrap());
}
