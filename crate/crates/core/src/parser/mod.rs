//! Text format for programs (`.imp` files).
//!
//! ```text
//! var i: int;
//! var n: int;
//! assume n >= 0;
//! i := 0;
//! while (i < n) invariant i <= n {
//!     i := i + 1;
//! }
//! assert i = n;
//! ```
//!
//! A `*` loop or branch condition is read as a fresh boolean that is
//! havocked before the instruction (and at the end of each iteration);
//! rendering folds that pattern back into `*`.

mod grammar;
mod lexer;
mod render;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Formula, Program, SymbolTable};

pub use render::{render_expr, render_program};

/// Base name of the booleans introduced for `*` conditions.
pub const NONDET_BASE: &str = "nd";

/// Position of a syntax node: byte range plus 1-based line and column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { message: String, span: SourceSpan },
    #[error("{span}: sort error: {message}")]
    Sort { message: String, span: SourceSpan },
    #[error("{span}: undeclared symbol `{name}`")]
    Undeclared { name: String, span: SourceSpan },
}

impl ParseError {
    pub(crate) fn syntax(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError::Syntax {
            message: message.into(),
            span,
        }
    }

    pub(crate) fn sort(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError::Sort {
            message: message.into(),
            span,
        }
    }

    pub(crate) fn undeclared(name: &str, span: SourceSpan) -> Self {
        ParseError::Undeclared {
            name: name.to_string(),
            span,
        }
    }

    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::Sort { span, .. }
            | ParseError::Undeclared { span, .. } => *span,
        }
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    grammar::Parser::new(text, SymbolTable::new())?.program()
}

/// Parses a standalone formula against an existing symbol table.
pub fn parse_formula(text: &str, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    let mut p = grammar::Parser::new(text, symbols.clone())?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{
        instruction_at, loop_at, loop_locations, set_invariant, Expr, Instr, Sort,
    };
    use crate::loc;

    const P1: &str = "var i: int;\nvar n: int;\n\
        assume n >= 0; i := 0; while (i < n) invariant true { i := i + 1; } assert i = n;";

    #[test]
    fn parses_the_counter_program() {
        let p = parse_program(P1).unwrap();
        assert_eq!(p.body.len(), 4);
        assert_eq!(loop_locations(&p), vec![loc!(2)]);
        let (cond, body, inv) = loop_at(&p, &loc!(2)).unwrap();
        assert_eq!(cond, &Expr::lt(Expr::int_var("i"), Expr::int_var("n")));
        assert_eq!(body.len(), 1);
        assert!(inv.is_true());
    }

    #[test]
    fn missing_invariant_defaults_to_true() {
        let p = parse_program("var b: bool; while (b) { }").unwrap();
        assert!(loop_at(&p, &loc!(0)).unwrap().2.is_true());
    }

    #[test]
    fn star_loop_is_desugared() {
        let p = parse_program("while (*) { }").unwrap();
        assert_eq!(p.body.len(), 2);
        let Instr::Havoc(v) = &p.body[0] else {
            panic!("expected havoc, got {:?}", p.body[0]);
        };
        assert_eq!(v.sort, Sort::Bool);
        assert!(crate::lang::is_reserved(&v.name));
        let (cond, body, _) = loop_at(&p, &loc!(1)).unwrap();
        assert_eq!(cond, &Expr::Var(v.clone()));
        assert_eq!(body, &vec![Instr::Havoc(v.clone())]);
        assert_eq!(render_program(&p), "while (*) {\n}\n");
    }

    #[test]
    fn star_branch_is_desugared() {
        let src = "var x: int;\n\nif (*) {\n    x := 1;\n} else {\n    x := 2;\n}\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.body.len(), 2);
        assert!(matches!(instruction_at(&p, &loc!(1)), Ok(Some(Instr::If { .. }))));
        assert_eq!(render_program(&p), src);
    }

    #[test]
    fn sort_errors() {
        let e = parse_program("var x: int; assert x = true;").unwrap_err();
        assert!(matches!(e, ParseError::Sort { .. }), "{e}");
        let e = parse_program("var b: bool; var x: int; x := b;").unwrap_err();
        assert!(matches!(e, ParseError::Sort { .. }), "{e}");
        let e = parse_program("var x: int; assume x && x;").unwrap_err();
        assert!(matches!(e, ParseError::Sort { .. }), "{e}");
        let e = parse_program("fun f: int -> int; var x: int; assume f(x, x) = 0;").unwrap_err();
        assert!(matches!(e, ParseError::Sort { .. }), "{e}");
    }

    #[test]
    fn undeclared_and_syntax_errors() {
        let e = parse_program("assume y > 0;").unwrap_err();
        assert!(matches!(e, ParseError::Undeclared { ref name, .. } if name == "y"));
        let e = parse_program("var x: int;\nx := ;").unwrap_err();
        let ParseError::Syntax { span, .. } = e else {
            panic!("{e}")
        };
        assert_eq!((span.line, span.col), (2, 6));
        assert!(parse_program("var x: int; assume 0 < x < 2;").is_err());
        assert!(parse_program("var x: int; var x: bool;").is_err());
        assert!(parse_program("var x: int; while (x > 0) { ").is_err());
    }

    #[test]
    fn precedence() {
        let mut t = SymbolTable::new();
        for v in ["a", "b", "c"] {
            t.declare_var(v, Sort::Bool);
        }
        t.declare_var("x", Sort::Int);
        let (a, b, c) = (Expr::bool_var("a"), Expr::bool_var("b"), Expr::bool_var("c"));
        assert_eq!(
            parse_formula("a || b && c ==> a", &t).unwrap(),
            Expr::Implies(
                Box::new(Expr::Or(vec![a.clone(), Expr::And(vec![b.clone(), c.clone()])])),
                Box::new(a.clone())
            )
        );
        assert_eq!(
            parse_formula("a ==> b ==> c", &t).unwrap(),
            Expr::Implies(
                Box::new(a.clone()),
                Box::new(Expr::Implies(Box::new(b.clone()), Box::new(c.clone())))
            )
        );
        let x = Expr::int_var("x");
        assert_eq!(
            parse_formula("x - 1 - 2 * x >= -3", &t).unwrap(),
            Expr::ge(
                Expr::sub(
                    Expr::sub(x.clone(), Expr::int(1)),
                    Expr::mul(Expr::int(2), x.clone())
                ),
                Expr::int(-3)
            )
        );
        assert_eq!(
            parse_formula("!a && b", &t).unwrap(),
            Expr::And(vec![Expr::Not(Box::new(a)), b])
        );
        assert_eq!(
            parse_formula("-x = 0", &t).unwrap(),
            Expr::eq(Expr::sub(Expr::int(0), x), Expr::int(0))
        );
    }

    #[test]
    fn invariant_true_units_are_not_printed() {
        let p = parse_program(P1).unwrap();
        let inv = Expr::And(vec![
            Expr::tt(),
            Expr::le(Expr::int_var("i"), Expr::int_var("n")),
        ]);
        let q = set_invariant(&p, &loc!(2), inv).unwrap();
        assert!(render_program(&q).contains("while (i < n) invariant i <= n {"));
    }

    #[test]
    fn counter_round_trip() {
        let p = parse_program(P1).unwrap();
        let text = render_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p);
        assert_eq!(render_program(&parse_program(&text).unwrap()), text);
    }

    #[test]
    fn empty_program_renders_header_only() {
        assert_eq!(render_program(&Program::default()), "");
        let p = parse_program("var x: int;").unwrap();
        assert_eq!(render_program(&p), "var x: int;\n");
    }

    #[test]
    fn functions_and_axioms() {
        let src = "fun f: int, bool -> int;\nvar x: int;\naxiom f(x, true) >= 0;\nassert f(x + 1, x < 0) >= 0;";
        let p = parse_program(src).unwrap();
        assert_eq!(p.axioms.len(), 1);
        assert_eq!(parse_program(&render_program(&p)).unwrap(), p);
        let Instr::Assert(f) = &p.body[0] else {
            panic!()
        };
        assert_eq!(f.functions().len(), 1);
    }
}
