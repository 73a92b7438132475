//! Abstract syntax of programs and formulas, locations, and invariant editing.

mod expr;
mod location;
mod program;

pub use expr::{ArithOp, CmpOp, Expr, Formula, Sort, Subst, Var};
pub use location::{location_order, Location};
pub use program::{
    base_name, block_exprs, equiv_mod_invariants, instruction_at, invariants, is_reserved,
    locations, loop_at, loop_locations, modified_vars, set_invariant, Block, FunSig, Instr,
    Program, SymbolTable, RESERVED_MARK,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("location {0} is not a location of the program")]
    InvalidLocation(Location),
    #[error("no loop at location {0}")]
    NotALoop(Location),
    #[error("no straight-line path from {from} to {to}")]
    InvalidRange { from: Location, to: Location },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loc;

    fn assign(v: &str, e: Expr) -> Instr {
        Instr::Assign(Var::int(v), e)
    }

    /// Two assignments, a loop with a two-assignment body, an assertion.
    fn fig3_shape() -> Program {
        let i = Expr::int_var("i");
        let l = Expr::int_var("l");
        let body = vec![
            assign("i", Expr::add(i.clone(), Expr::int(1))),
            assign("l", Expr::add(l.clone(), Expr::int(1))),
        ];
        let mut symbols = SymbolTable::new();
        symbols.declare_var("i", Sort::Int);
        symbols.declare_var("l", Sort::Int);
        symbols.declare_var("c", Sort::Bool);
        Program::new(
            vec![
                assign("i", Expr::int(1)),
                assign("l", Expr::int(1)),
                Instr::While {
                    cond: Expr::bool_var("c"),
                    body,
                    invariant: Expr::tt(),
                },
                Instr::Assert(Expr::eq(i, l)),
            ],
            symbols,
        )
    }

    fn p1() -> Program {
        let i = Expr::int_var("i");
        let n = Expr::int_var("n");
        let mut symbols = SymbolTable::new();
        symbols.declare_var("i", Sort::Int);
        symbols.declare_var("n", Sort::Int);
        Program::new(
            vec![
                Instr::Assume(Expr::ge(n.clone(), Expr::int(0))),
                assign("i", Expr::int(0)),
                Instr::While {
                    cond: Expr::lt(i.clone(), n.clone()),
                    body: vec![assign("i", Expr::add(i.clone(), Expr::int(1)))],
                    invariant: Expr::tt(),
                },
                Instr::Assert(Expr::eq(i, n)),
            ],
            symbols,
        )
    }

    #[test]
    fn locations_of_two_instructions() {
        let p = Program::new(
            vec![assign("x", Expr::int(1)), assign("x", Expr::int(2))],
            SymbolTable::new(),
        );
        let got: Vec<_> = locations(&p).into_iter().collect();
        assert_eq!(got, vec![loc!(0), loc!(1), loc!(2)]);
    }

    #[test]
    fn locations_of_fig3_shape() {
        let got: Vec<_> = locations(&fig3_shape()).into_iter().collect();
        let want = vec![
            loc!(0),
            loc!(1),
            loc!(2),
            loc!(2, 1, 0),
            loc!(2, 1, 1),
            loc!(2, 1, 2),
            loc!(3),
            loc!(4),
        ];
        assert_eq!(got, want);
        assert_eq!(loop_locations(&fig3_shape()), vec![loc!(2)]);
    }

    #[test]
    fn empty_program_has_one_location() {
        let p = Program::default();
        assert_eq!(locations(&p).into_iter().collect::<Vec<_>>(), vec![loc!(0)]);
        assert!(loop_locations(&p).is_empty());
    }

    #[test]
    fn instruction_lookup() {
        let p = fig3_shape();
        assert_eq!(
            instruction_at(&p, &loc!(1)).unwrap(),
            Some(&assign("l", Expr::int(1)))
        );
        assert_eq!(instruction_at(&p, &loc!(4)).unwrap(), None);
        assert!(instruction_at(&p, &loc!(2, 1, 1)).unwrap().is_some());
        assert_eq!(instruction_at(&p, &loc!(2, 1, 2)).unwrap(), None);
        assert_eq!(
            instruction_at(&p, &loc!(5)),
            Err(LangError::InvalidLocation(loc!(5)))
        );
        assert_eq!(
            instruction_at(&p, &loc!(1, 1, 0)),
            Err(LangError::InvalidLocation(loc!(1, 1, 0)))
        );
    }

    #[test]
    fn nested_loop_locations_in_order() {
        let inner = Instr::While {
            cond: Expr::bool_var("c"),
            body: vec![],
            invariant: Expr::tt(),
        };
        let outer = Instr::While {
            cond: Expr::bool_var("c"),
            body: vec![inner],
            invariant: Expr::tt(),
        };
        let p = Program::new(vec![Instr::Havoc(Var::bool("c")), outer], SymbolTable::new());
        assert_eq!(loop_locations(&p), vec![loc!(1), loc!(1, 1, 0)]);
    }

    #[test]
    fn set_invariant_edits_only_the_loop() {
        let p = p1();
        let inv = Expr::le(Expr::int_var("i"), Expr::int_var("n"));
        let q = set_invariant(&p, &loc!(2), inv.clone()).unwrap();
        assert_eq!(loop_at(&q, &loc!(2)).unwrap().2, &inv);
        assert!(equiv_mod_invariants(&p, &q));
        assert_ne!(p, q);
        let again = set_invariant(&q, &loc!(2), inv).unwrap();
        assert_eq!(again, q);
        assert_eq!(
            set_invariant(&p, &loc!(0), Expr::tt()),
            Err(LangError::NotALoop(loc!(0)))
        );
    }

    #[test]
    fn equivalence_sees_body_changes() {
        let p = p1();
        assert!(equiv_mod_invariants(&p, &p));
        let mut q = p.clone();
        q.body.pop();
        assert!(!equiv_mod_invariants(&p, &q));
    }
}
