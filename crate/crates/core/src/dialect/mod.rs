//! Lexer, parser and pretty-printer for the time-series SQL dialect.
//!
//! The grammar covers the constructs the dialect needs and nothing more:
//!
//! ```text
//! script      := { statement ";" }
//! statement   := CREATE TABLE ident "(" coldef { "," coldef } [ "," unique ] ")"
//!              | CREATE VIEW ident AS ( "(" select ")" | select )
//!              | CREATE EVENT ident "(" event ")"
//!              | MONITOR ident
//!              | EXECUTE ident
//! coldef      := ident type
//! unique      := ( UNIQUE MAP | UNIQUE_MAP ) "(" ident "," ident ")"
//! select      := SELECT item { "," item } FROM tref { "," tref } [ WHERE join { AND join } ]
//! item        := ( expr | case | "(" case ")" ) [ AS ident ]
//! case        := CASE WHEN bool THEN string [ ELSE string ] END
//! tref        := ident [ [ AS ] ident ]
//! join        := colref "=" colref
//! bool        := conj { OR conj }
//! conj        := atom { AND atom }
//! atom        := "(" bool ")" | expr eop expr
//! eop         := "<" | "<=" | "=" | ">=" | ">"
//! expr        := term { ( "+" | "-" ) term }        -- linear only
//! term        := unary { "*" unary }
//! unary       := "-" unary | number | string | colref | "(" expr ")"
//! event       := GC_LEARN ident { "," ident }
//!                FOR ( MINIMIZE | MAXIMIZE ) SUM "(" expr ")" AS ident
//!                WITH clause { AND clause }
//!                FROM tref { "," tref } [ WHERE join { AND join } ]
//! clause      := colref "=" "'1'" THEN expr eop expr  -- colref names an Indicator column
//!              | expr eop expr
//! ```

pub mod ast;
pub mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parser::{parse_script, parse_statement};
pub use printer::pretty_print;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialectError {
    #[error("{line}:{col}: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax { line: usize, col: usize, expected: String, found: String },
    #[error("{line}:{col}: unknown statement keyword `{word}`")]
    UnknownKeyword { line: usize, col: usize, word: String },
    #[error("{0}")]
    Semantic(String),
}
