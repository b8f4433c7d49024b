use std::fmt;

use super::DialectError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Create,
    Table,
    View,
    Event,
    As,
    Select,
    From,
    Where,
    Case,
    When,
    Then,
    Else,
    End,
    And,
    Or,
    Monitor,
    Execute,
    GcLearn,
    For,
    Minimize,
    Maximize,
    With,
    Unique,
    Map,
    UniqueMap,
    Sum,
}

const KEYWORDS: &[(&str, Keyword)] = &[
    ("CREATE", Keyword::Create),
    ("TABLE", Keyword::Table),
    ("VIEW", Keyword::View),
    ("EVENT", Keyword::Event),
    ("AS", Keyword::As),
    ("SELECT", Keyword::Select),
    ("FROM", Keyword::From),
    ("WHERE", Keyword::Where),
    ("CASE", Keyword::Case),
    ("WHEN", Keyword::When),
    ("THEN", Keyword::Then),
    ("ELSE", Keyword::Else),
    ("END", Keyword::End),
    ("AND", Keyword::And),
    ("OR", Keyword::Or),
    ("MONITOR", Keyword::Monitor),
    ("EXECUTE", Keyword::Execute),
    ("GC_LEARN", Keyword::GcLearn),
    ("FOR", Keyword::For),
    ("MINIMIZE", Keyword::Minimize),
    ("MAXIMIZE", Keyword::Maximize),
    ("WITH", Keyword::With),
    ("UNIQUE", Keyword::Unique),
    ("MAP", Keyword::Map),
    ("UNIQUE_MAP", Keyword::UniqueMap),
    ("SUM", Keyword::Sum),
];

impl Keyword {
    pub fn lookup(word: &str) -> Option<Keyword> {
        KEYWORDS
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(word))
            .map(|(_, kw)| *kw)
    }

    pub fn as_str(self) -> &'static str {
        KEYWORDS.iter().find(|(_, k)| *k == self).map(|(s, _)| *s).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Dot,
    Star,
    Plus,
    Minus,
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    /// `<>` or `!=`: lexed so the parser can reject it with a useful message.
    NotEq,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => f.write_str(k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Str(s) => write!(f, "string '{s}'"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Semicolon => f.write_str("`;`"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Eq => f.write_str("`=`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::NotEq => f.write_str("`<>`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }
}

/// Splits script text into tokens. Keywords are case-insensitive, `--`
/// starts a comment running to end of line, strings are single-quoted with
/// `''` as the escaped quote.
pub fn tokenize(text: &str) -> Result<Vec<Token>, DialectError> {
    let mut cur = Cursor { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, col) = (cur.line, cur.col);
        let lex_err = |msg: String| DialectError::Lex { line, col, msg };
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                word.push(c);
                cur.bump();
            }
            match Keyword::lookup(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() {
            let mut num = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_digit() || *c == '.') {
                num.push(c);
                cur.bump();
            }
            let value: f64 = num
                .parse()
                .map_err(|_| lex_err(format!("malformed number `{num}`")))?;
            TokenKind::Number(value)
        } else if c == '\'' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(lex_err("unterminated string literal".into())),
                    Some('\'') if cur.eat('\'') => s.push('\''),
                    Some('\'') => break,
                    Some(ch) => s.push(ch),
                }
            }
            TokenKind::Str(s)
        } else {
            cur.bump();
            match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                ',' => TokenKind::Comma,
                ';' => TokenKind::Semicolon,
                '.' => TokenKind::Dot,
                '*' => TokenKind::Star,
                '+' => TokenKind::Plus,
                '-' if cur.peek() == Some('-') => {
                    while cur.peek().is_some_and(|c| c != '\n') {
                        cur.bump();
                    }
                    continue;
                }
                '-' => TokenKind::Minus,
                '=' => TokenKind::Eq,
                '<' if cur.eat('=') => TokenKind::Le,
                '<' if cur.eat('>') => TokenKind::NotEq,
                '<' => TokenKind::Lt,
                '>' if cur.eat('=') => TokenKind::Ge,
                '>' => TokenKind::Gt,
                '!' if cur.eat('=') => TokenKind::NotEq,
                other => return Err(lex_err(format!("illegal character `{other}`"))),
            }
        };
        out.push(Token { kind, line, col });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn monitor_statement() {
        let expected = vec![
            TokenKind::Keyword(Keyword::Monitor),
            TokenKind::Ident("V".into()),
            TokenKind::Semicolon,
        ];
        assert_eq!(kinds("MONITOR V;"), expected);
        let lower = kinds("monitor v;");
        assert_eq!(lower[0], TokenKind::Keyword(Keyword::Monitor));
        assert_eq!(lower[1], TokenKind::Ident("v".into()));
        assert_eq!(lower[2], TokenKind::Semicolon);
    }

    #[test]
    fn unterminated_string_is_a_lex_error() {
        let err = tokenize("SELECT 'unterminated").unwrap_err();
        assert!(matches!(err, DialectError::Lex { line: 1, col: 8, .. }), "{err:?}");
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("MONITOR V;\n  @").unwrap_err();
        assert!(matches!(err, DialectError::Lex { line: 2, col: 3, .. }), "{err:?}");
    }

    #[test]
    fn comments_operators_and_quotes() {
        assert_eq!(
            kinds("a <= 0.9 * b -- trailing\n>= 'it''s' <> !="),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Le,
                TokenKind::Number(0.9),
                TokenKind::Star,
                TokenKind::Ident("b".into()),
                TokenKind::Ge,
                TokenKind::Str("it's".into()),
                TokenKind::NotEq,
                TokenKind::NotEq,
            ]
        );
    }

    #[test]
    fn malformed_number() {
        assert!(matches!(tokenize("1.2.3"), Err(DialectError::Lex { .. })));
    }
}
