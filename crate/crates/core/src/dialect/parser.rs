use super::ast::*;
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::DialectError;

/// Parses a script of `;`-terminated statements.
pub fn parse_script(text: &str) -> Result<Vec<Statement>, DialectError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut statements = Vec::new();
    while !parser.at_end() {
        statements.push(parser.statement()?);
        parser.expect(TokenKind::Semicolon, "`;`")?;
    }
    Ok(statements)
}

/// Parses exactly one statement (the terminating `;` is required).
pub fn parse_statement(text: &str) -> Result<Statement, DialectError> {
    let mut stmts = parse_script(text)?;
    match stmts.len() {
        1 => Ok(stmts.pop().unwrap()),
        n => Err(DialectError::Syntax {
            line: 1,
            col: 1,
            expected: "exactly one statement".into(),
            found: format!("{n} statements"),
        }),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, DialectError>;

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn error_here(&self, expected: &str) -> DialectError {
        match self.tokens.get(self.pos) {
            Some(t) => DialectError::Syntax {
                line: t.line,
                col: t.col,
                expected: expected.into(),
                found: t.kind.to_string(),
            },
            None => {
                let (line, col) = self.tokens.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
                DialectError::Syntax { line, col, expected: expected.into(), found: "end of input".into() }
            }
        }
    }

    fn check(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn check_kw(&self, kw: Keyword) -> bool {
        self.check(&TokenKind::Keyword(kw))
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(kw))
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> PResult<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error_here(kw.as_str()))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let id = Ident(s.clone());
                self.pos += 1;
                Ok(id)
            }
            _ => Err(self.error_here("identifier")),
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let here = self.tokens[self.pos].clone();
        match &here.kind {
            TokenKind::Keyword(Keyword::Create) => {
                self.pos += 1;
                match self.peek() {
                    Some(TokenKind::Keyword(Keyword::Table)) => {
                        self.pos += 1;
                        Ok(Statement::CreateTable(self.create_table()?))
                    }
                    Some(TokenKind::Keyword(Keyword::View)) => {
                        self.pos += 1;
                        Ok(Statement::CreateView(self.create_view()?))
                    }
                    Some(TokenKind::Keyword(Keyword::Event)) => {
                        self.pos += 1;
                        Ok(Statement::CreateEvent(self.create_event()?))
                    }
                    Some(TokenKind::Ident(word)) => {
                        let t = &self.tokens[self.pos];
                        Err(DialectError::UnknownKeyword { line: t.line, col: t.col, word: format!("CREATE {word}") })
                    }
                    _ => Err(self.error_here("TABLE, VIEW or EVENT")),
                }
            }
            TokenKind::Keyword(Keyword::Monitor) => {
                self.pos += 1;
                Ok(Statement::Monitor { view: self.ident()? })
            }
            TokenKind::Keyword(Keyword::Execute) => {
                self.pos += 1;
                Ok(Statement::Execute { event: self.ident()? })
            }
            TokenKind::Ident(word) => {
                Err(DialectError::UnknownKeyword { line: here.line, col: here.col, word: word.clone() })
            }
            _ => Err(self.error_here("CREATE, MONITOR or EXECUTE")),
        }
    }

    fn create_table(&mut self) -> PResult<CreateTable> {
        let name = self.ident()?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut columns = Vec::new();
        let mut unique_map = None;
        loop {
            if self.check_kw(Keyword::Unique) || self.check_kw(Keyword::UniqueMap) {
                if self.eat_kw(Keyword::Unique) {
                    self.expect_kw(Keyword::Map)?;
                } else {
                    self.pos += 1;
                }
                self.expect(TokenKind::LParen, "`(`")?;
                let a = self.ident()?;
                self.expect(TokenKind::Comma, "`,`")?;
                let b = self.ident()?;
                self.expect(TokenKind::RParen, "`)`")?;
                unique_map = Some((a, b));
                break;
            }
            let col = self.ident()?;
            let ty_tok = self.ident().map_err(|_| self.error_here("column type"))?;
            let ty = ColumnType::from_keyword(ty_tok.as_str()).ok_or_else(|| {
                self.pos -= 1;
                self.error_here("column type (HOURLY_INTERVAL, DAILY_INTERVAL, MONTHLY_INTERVAL, QUARTERLY_INTERVAL, YEARLY_INTERVAL, REAL, INTEGER)")
            })?;
            columns.push(ColumnDef { name: col, ty });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RParen, "`)`")?;
        if let Some((a, b)) = &unique_map {
            for key in [a, b] {
                match columns.iter().find(|c| c.name == *key) {
                    Some(c) if c.ty.is_interval() => {}
                    _ => {
                        return Err(DialectError::Semantic(format!(
                            "UNIQUE MAP column `{key}` of table `{name}` must be an interval-typed column"
                        )))
                    }
                }
            }
        }
        Ok(CreateTable { name, columns, unique_map })
    }

    fn create_view(&mut self) -> PResult<CreateView> {
        let name = self.ident()?;
        self.expect_kw(Keyword::As)?;
        let select = if self.eat(&TokenKind::LParen) {
            let s = self.select()?;
            self.expect(TokenKind::RParen, "`)`")?;
            s
        } else {
            self.select()?
        };
        Ok(CreateView { name, select })
    }

    fn select(&mut self) -> PResult<Select> {
        self.expect_kw(Keyword::Select)?;
        let mut items = vec![self.select_item()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.select_item()?);
        }
        self.expect_kw(Keyword::From)?;
        let from = self.table_refs()?;
        let joins = if self.eat_kw(Keyword::Where) { self.joins()? } else { Vec::new() };
        Ok(Select { items, from, joins })
    }

    fn select_item(&mut self) -> PResult<SelectItem> {
        let expr = if self.check(&TokenKind::LParen) && self.peek_at(1) == Some(&TokenKind::Keyword(Keyword::Case)) {
            self.pos += 1;
            let case = self.case_expr()?;
            self.expect(TokenKind::RParen, "`)`")?;
            SelectExpr::Case(case)
        } else if self.check_kw(Keyword::Case) {
            SelectExpr::Case(self.case_expr()?)
        } else {
            SelectExpr::Scalar(self.expr()?)
        };
        let alias = if self.eat_kw(Keyword::As) { Some(self.ident()?) } else { None };
        Ok(SelectItem { expr, alias })
    }

    fn case_expr(&mut self) -> PResult<CaseExpr> {
        self.expect_kw(Keyword::Case)?;
        self.expect_kw(Keyword::When)?;
        let condition = self.bool_expr()?;
        self.expect_kw(Keyword::Then)?;
        let then = self.string_literal()?;
        let otherwise = if self.eat_kw(Keyword::Else) { Some(self.string_literal()?) } else { None };
        self.expect_kw(Keyword::End)?;
        Ok(CaseExpr { condition, then, otherwise })
    }

    fn string_literal(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error_here("string literal")),
        }
    }

    fn table_refs(&mut self) -> PResult<Vec<TableRef>> {
        let mut refs = vec![self.table_ref()?];
        while self.eat(&TokenKind::Comma) {
            refs.push(self.table_ref()?);
        }
        Ok(refs)
    }

    fn table_ref(&mut self) -> PResult<TableRef> {
        let name = self.ident()?;
        let alias = if self.eat_kw(Keyword::As) {
            Some(self.ident()?)
        } else if matches!(self.peek(), Some(TokenKind::Ident(_))) {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(TableRef { name, alias })
    }

    fn joins(&mut self) -> PResult<Vec<Join>> {
        let mut joins = vec![self.join()?];
        while self.eat_kw(Keyword::And) {
            joins.push(self.join()?);
        }
        Ok(joins)
    }

    fn join(&mut self) -> PResult<Join> {
        let left = self.column_ref()?;
        self.expect(TokenKind::Eq, "`=` (WHERE supports equality joins only)")?;
        let right = self.column_ref()?;
        Ok(Join { left, right })
    }

    fn column_ref(&mut self) -> PResult<ColumnRef> {
        let first = self.ident()?;
        if self.eat(&TokenKind::Dot) {
            let column = self.ident()?;
            Ok(ColumnRef { qualifier: Some(first), column })
        } else {
            Ok(ColumnRef { qualifier: None, column: first })
        }
    }

    fn bool_expr(&mut self) -> PResult<BoolExpr> {
        let mut parts = vec![self.bool_and()?];
        while self.eat_kw(Keyword::Or) {
            parts.push(self.bool_and()?);
        }
        Ok(BoolExpr::or(parts))
    }

    fn bool_and(&mut self) -> PResult<BoolExpr> {
        let mut parts = vec![self.bool_primary()?];
        while self.eat_kw(Keyword::And) {
            parts.push(self.bool_primary()?);
        }
        Ok(BoolExpr::and(parts))
    }

    fn bool_primary(&mut self) -> PResult<BoolExpr> {
        if self.check(&TokenKind::LParen) {
            let save = self.pos;
            self.pos += 1;
            match self.bool_expr() {
                Ok(inner) if self.eat(&TokenKind::RParen) => return Ok(inner),
                _ => self.pos = save,
            }
        }
        Ok(BoolExpr::Cmp(self.comparison()?))
    }

    fn comparison(&mut self) -> PResult<Comparison> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Ge) => CmpOp::Ge,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::NotEq) => {
                return Err(self.error_here("comparison operator (<, <=, =, >=, >); `<>` is not supported"))
            }
            _ => return Err(self.error_here("comparison operator (<, <=, =, >=, >)")),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        Ok(Comparison { lhs, op, rhs })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.check(&TokenKind::Star) {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.unary()?;
            if !lhs.is_constant() && !rhs.is_constant() {
                self.pos = at;
                return Err(self.error_here("linear expression (one factor of `*` must be a constant)"));
            }
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        match self.peek().cloned() {
            Some(TokenKind::Number(n)) => {
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(TokenKind::Ident(_)) => Ok(Expr::Column(self.column_ref()?)),
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.error_here("expression")),
        }
    }

    fn create_event(&mut self) -> PResult<CreateEvent> {
        let name = self.ident()?;
        self.expect(TokenKind::LParen, "`(`")?;
        self.expect_kw(Keyword::GcLearn)?;
        let mut learn = vec![self.ident()?];
        while self.eat(&TokenKind::Comma) {
            learn.push(self.ident()?);
        }
        self.expect_kw(Keyword::For)?;
        let direction = if self.eat_kw(Keyword::Minimize) {
            Direction::Minimize
        } else if self.eat_kw(Keyword::Maximize) {
            Direction::Maximize
        } else {
            return Err(self.error_here("MINIMIZE or MAXIMIZE"));
        };
        self.expect_kw(Keyword::Sum)?;
        self.expect(TokenKind::LParen, "`(`")?;
        let sum_of = self.expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        self.expect_kw(Keyword::As)?;
        let alias = self.ident()?;
        self.expect_kw(Keyword::With)?;
        let mut with = vec![self.with_clause()?];
        while self.eat_kw(Keyword::And) {
            with.push(self.with_clause()?);
        }
        self.expect_kw(Keyword::From)?;
        let from = self.table_refs()?;
        let joins = if self.eat_kw(Keyword::Where) { self.joins()? } else { Vec::new() };
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(CreateEvent { name, learn, objective: Objective { direction, sum_of, alias }, with, from, joins })
    }

    fn with_clause(&mut self) -> PResult<WithClause> {
        let start = self.pos;
        let first = self.comparison()?;
        if !self.eat_kw(Keyword::Then) {
            return Ok(WithClause::Inequality(first));
        }
        let guard = match first {
            Comparison { lhs: Expr::Column(c), op: CmpOp::Eq, rhs: Expr::Str(s) }
                if c.qualifier.is_some() && c.column.is("Indicator") && s == "1" =>
            {
                c
            }
            _ => {
                self.pos = start;
                return Err(self.error_here("implication guard of the form `<view>.Indicator = '1'`"));
            }
        };
        let consequent = self.comparison()?;
        Ok(WithClause::Implication { guard, consequent })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monitor_and_execute() {
        assert_eq!(parse_statement("MONITOR V;").unwrap(), Statement::Monitor { view: "V".into() });
        assert_eq!(parse_statement("execute E ;").unwrap(), Statement::Execute { event: "e".into() });
    }

    #[test]
    fn terminator_is_mandatory() {
        assert!(matches!(parse_script("MONITOR V"), Err(DialectError::Syntax { .. })));
    }

    #[test]
    fn unknown_statement_keyword() {
        assert!(matches!(parse_script("DROP TABLE x;"), Err(DialectError::UnknownKeyword { .. })));
        assert!(matches!(parse_script("CREATE INDEX x;"), Err(DialectError::UnknownKeyword { .. })));
    }

    #[test]
    fn rejects_not_equal_operator() {
        let err = parse_script("CREATE VIEW V AS (SELECT (CASE WHEN A.x <> 1 THEN '1' END) AS Indicator FROM A);")
            .unwrap_err();
        assert!(err.to_string().contains("not supported"), "{err}");
    }

    #[test]
    fn rejects_nonlinear_products() {
        let err = parse_script("CREATE VIEW V AS (SELECT A.x * A.y AS z FROM A);").unwrap_err();
        assert!(err.to_string().contains("linear"), "{err}");
    }

    #[test]
    fn unique_map_spellings() {
        let a = parse_statement("CREATE TABLE P (time HOURLY_INTERVAL, period MONTHLY_INTERVAL, UNIQUE MAP(time, period));").unwrap();
        let b = parse_statement("CREATE TABLE P (time HOURLY_INTERVAL, period MONTHLY_INTERVAL, UNIQUE_MAP(time, period));").unwrap();
        assert_eq!(a, b);
        let err = parse_statement("CREATE TABLE P (time HOURLY_INTERVAL, value REAL, UNIQUE MAP(time, value));").unwrap_err();
        assert!(matches!(err, DialectError::Semantic(_)));
    }

    #[test]
    fn unknown_column_type() {
        let err = parse_statement("CREATE TABLE P (time TIMESTAMP);").unwrap_err();
        assert!(err.to_string().contains("column type"), "{err}");
    }

    #[test]
    fn guard_must_be_indicator_equals_one() {
        let text = "CREATE EVENT E (GC_LEARN P FOR MINIMIZE SUM(P.value) AS T WITH A.flag = '1' THEN P.value >= 0 FROM P, A);";
        let err = parse_script(text).unwrap_err();
        assert!(err.to_string().contains("Indicator"), "{err}");
    }

    #[test]
    fn parenthesized_comparison_operands() {
        let s = parse_statement("CREATE VIEW V AS (SELECT (CASE WHEN (A.x + 1) * 2 > A.y THEN '1' END) AS Indicator FROM A);")
            .unwrap();
        let Statement::CreateView(v) = s else { panic!() };
        let SelectExpr::Case(case) = &v.select.items[0].expr else { panic!() };
        assert!(matches!(case.condition, BoolExpr::Cmp(_)));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_script("MONITOR\n  ;") {
            Err(DialectError::Syntax { line, col, expected, found }) => {
                assert_eq!((line, col), (2, 3));
                assert_eq!(expected, "identifier");
                assert_eq!(found, "`;`");
            }
            other => panic!("{other:?}"),
        }
    }
}
