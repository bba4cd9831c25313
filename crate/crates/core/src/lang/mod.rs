//! Constraint language: AST, parser, printer and type checking.
//!
//! Concrete syntax, one statement per `;`:
//!
//! ```text
//! int ptr in 0..500;
//! str input_uri maxlen 200;
//! assert uri_length == strlen(input_uri);
//! assert ptr > 99 || (ptr >= 0 && ptr < 5);
//! neural "http.nsxmodel" (uri_length, ver_length) -> (ptr);
//! ```
//!
//! `#` and `//` start line comments.

mod ast;
mod check;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeSet;

pub use ast::*;
pub use check::{validate, validate_constraint};
pub use parser::{parse, parse_constraint};
pub use printer::print;
pub(crate) use printer::write_quoted;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LangError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: type error: {msg}")]
    Type { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared variable `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: duplicate declaration of `{name}`")]
    Duplicate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: invalid domain: {msg}")]
    Domain { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: invalid neural declaration: {msg}")]
    Neural { line: usize, col: usize, msg: String },
}

impl LangError {
    pub fn position(&self) -> (usize, usize) {
        match *self {
            LangError::Syntax { line, col, .. }
            | LangError::Type { line, col, .. }
            | LangError::Undeclared { line, col, .. }
            | LangError::Duplicate { line, col, .. }
            | LangError::Domain { line, col, .. }
            | LangError::Neural { line, col, .. } => (line, col),
        }
    }
}

/// Variables referenced by a symbolic constraint.
pub fn free_vars(c: &Constraint) -> BTreeSet<String> {
    c.free_vars()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    #[test]
    fn parses_buffer_condition() {
        let f = parse("int ptr; assert ptr > 99;").unwrap();
        assert_eq!(f.symbolic, vec![Constraint::cmp(CmpOp::Gt, Expr::var("ptr"), num(99.0))]);
    }

    #[test]
    fn parses_strlen_equation() {
        let f = parse("str u; int L; assert L == strlen(u);").unwrap();
        assert_eq!(
            f.symbolic,
            vec![Constraint::cmp(CmpOp::Eq, Expr::var("L"), Expr::strlen(Expr::var("u")))]
        );
    }

    #[test]
    fn missing_operand_is_a_syntax_error() {
        let err = parse("int a; assert a < ;").unwrap_err();
        match err {
            LangError::Syntax { line, col, .. } => assert_eq!((line, col), (1, 19)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse("int a;\nint b;\nassert a < b &&;\n").unwrap_err();
        assert_eq!(err.position(), (3, 16));
    }

    #[test]
    fn type_errors() {
        assert!(matches!(parse("int a; assert strlen(a) > 1;"), Err(LangError::Type { .. })));
        assert!(matches!(parse("str s; int a; assert s < a;"), Err(LangError::Type { .. })));
        assert!(matches!(parse("str s; str t; assert s < t;"), Err(LangError::Type { .. })));
        assert!(matches!(parse("int a; assert contains(a, \"x\");"), Err(LangError::Type { .. })));
        assert!(parse("str s; str t; assert s != t;").is_ok());
    }

    #[test]
    fn undeclared_and_duplicate() {
        assert!(matches!(parse("assert q > 1;"), Err(LangError::Undeclared { .. })));
        assert!(matches!(parse("int a; real a;"), Err(LangError::Duplicate { .. })));
        assert!(matches!(
            parse("int a; int b; neural \"m\" (a) -> (c);"),
            Err(LangError::Undeclared { .. })
        ));
    }

    #[test]
    fn domains() {
        let f = parse("int x in -5..5; real r in -1.5..2.25; str s maxlen 8;").unwrap();
        assert_eq!(f.decls[0].domain, Some(Domain::Range { lo: -5.0, hi: 5.0 }));
        assert_eq!(f.decls[1].domain, Some(Domain::Range { lo: -1.5, hi: 2.25 }));
        assert_eq!(f.decls[2].domain, Some(Domain::MaxLen(8)));
        assert!(matches!(parse("int x in 5..1;"), Err(LangError::Domain { .. })));
        assert!(matches!(parse("int x in 0..1.5;"), Err(LangError::Domain { .. })));
        assert!(matches!(parse("str s in 0..1;"), Err(LangError::Domain { .. })));
    }

    #[test]
    fn neural_declaration_rules() {
        let f = parse("int a; int b; int c; neural \"m.nsx\" (a, b) -> (c);").unwrap();
        assert_eq!(f.neural[0].inputs, vec!["a", "b"]);
        assert!(matches!(parse("int a; neural \"m\" (a) -> (a);"), Err(LangError::Neural { .. })));
        assert!(matches!(parse("str s; int a; neural \"m\" (s) -> (a);"), Err(LangError::Neural { .. })));
    }

    #[test]
    fn parenthesised_constraints_and_expressions() {
        let f = parse("int a; int b; assert (a + b) * 2 < 3 && (a < b || b < a);").unwrap();
        let printed = print(&f);
        assert_eq!(printed.lines().nth(2).unwrap(), "assert (a + b) * 2 < 3 && (a < b || b < a);");
        assert_eq!(parse(&printed).unwrap(), f);
    }

    #[test]
    fn division_by_zero_is_syntactically_fine() {
        assert!(parse("real x; assert x / 0 > 1;").is_ok());
    }

    #[test]
    fn round_trips_exploit_conjunction() {
        let text = "\
str input_uri;
str input_version;
int uri_length;
int ver_length;
int ptr;
assert uri_length == strlen(input_uri);
assert ver_length == strlen(input_version);
assert ptr > 99;
neural \"http.nsxmodel\" (uri_length, ver_length) -> (ptr);
";
        let f = parse(text).unwrap();
        assert_eq!(print(&f), text);
        assert_eq!(parse(&print(&f)).unwrap(), f);
        let vars: BTreeSet<String> = f.symbolic.iter().flat_map(free_vars).collect();
        let want: BTreeSet<String> =
            ["uri_length", "input_uri", "ver_length", "input_version", "ptr"].iter().map(|s| s.to_string()).collect();
        assert_eq!(vars, want);
    }

    #[test]
    fn decls_only_file() {
        let f = parse("int a in 0..3;").unwrap();
        assert!(f.symbolic.is_empty());
        assert_eq!(print(&f), "int a in 0..3;\n");
    }

    #[test]
    fn free_vars_of_atoms() {
        let c = parse_constraint("ptr > 99").unwrap();
        assert_eq!(free_vars(&c).into_iter().collect::<Vec<_>>(), vec!["ptr"]);
        let c = parse_constraint("a < b && c < d").unwrap();
        assert_eq!(free_vars(&c).into_iter().collect::<Vec<_>>(), vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn dual_flips_comparisons() {
        let c = parse_constraint("c > d").unwrap();
        assert_eq!(c.dual().unwrap().to_string(), "c <= d");
        let c = parse_constraint("i < n && s < m").unwrap();
        assert_eq!(c.dual().unwrap().to_string(), "i >= n || s >= m");
        assert!(parse_constraint("contains(s, \"a\")").unwrap().dual().is_none());
    }

    #[test]
    fn negative_literals_and_unary_minus() {
        let c = parse_constraint("a - -3 > -x").unwrap();
        assert_eq!(c.to_string(), "a - -3 > 0 - x");
        assert_eq!(parse_constraint(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn string_escapes_round_trip() {
        let f = parse("str s; assert contains(s, \"a\\\"b\\\\c\\n\");").unwrap();
        assert_eq!(parse(&print(&f)).unwrap(), f);
    }
}
