use std::collections::BTreeSet;

use crate::lang::{is_reserved, modified_vars, Block, Expr, Formula, Instr, Program, Subst, SymbolTable, Var, RESERVED_MARK};

/// Generator of symbols that occur nowhere in a given program.
#[derive(Debug, Clone)]
pub struct FreshNames {
    taken: BTreeSet<String>,
    next: usize,
}

impl FreshNames {
    pub fn new(symbols: &SymbolTable) -> Self {
        FreshNames {
            taken: symbols
                .vars()
                .map(|v| v.name)
                .chain(symbols.funs().map(|(n, _)| n.to_string()))
                .collect(),
            next: 0,
        }
    }

    pub fn for_program(p: &Program) -> Self {
        FreshNames::new(&p.symbols)
    }

    pub fn var(&mut self, like: &Var) -> Var {
        let base = crate::lang::base_name(&like.name);
        loop {
            let name = format!("{base}{RESERVED_MARK}{}", self.next);
            self.next += 1;
            if !self.taken.contains(&name) {
                return Var::new(name, like.sort);
            }
        }
    }

    /// True for names produced by a generator like this one (as opposed to program variables).
    pub fn is_generated(&self, name: &str) -> bool {
        is_reserved(name) && !self.taken.contains(name)
    }
}

/// True when `name` is a calculus-generated symbol with respect to `symbols`.
pub fn is_generated(symbols: &SymbolTable, name: &str) -> bool {
    is_reserved(name) && !symbols.is_declared(name)
}

/// Renames every variable of `vars` to a fresh symbol.
pub(crate) fn renaming<'a>(vars: impl IntoIterator<Item = &'a Var>, fresh: &mut FreshNames) -> Subst {
    vars.into_iter()
        .map(|v| (v.name.clone(), Expr::Var(fresh.var(v))))
        .collect()
}

/// Weakest precondition of `f` with respect to a program.
pub fn wp(f: &Formula, p: &Program) -> Formula {
    wp_block(f, &p.body, &mut FreshNames::for_program(p))
}

pub fn wp_block(f: &Formula, block: &[Instr], fresh: &mut FreshNames) -> Formula {
    block
        .iter()
        .rev()
        .fold(f.clone(), |post, instr| wp_instr(&post, instr, fresh))
}

fn wp_instr(f: &Formula, instr: &Instr, fresh: &mut FreshNames) -> Formula {
    match instr {
        Instr::Assign(x, e) => f.subst1(&x.name, e),
        Instr::Havoc(x) => f.subst1(&x.name, &Expr::Var(fresh.var(x))),
        Instr::Assume(g) => Expr::implies(g.clone(), f.clone()),
        Instr::Assert(g) => Expr::and([g.clone(), f.clone()]),
        Instr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let a = wp_block(f, then_branch, fresh);
            let b = wp_block(f, else_branch, fresh);
            Expr::and([
                Expr::implies(cond.clone(), a),
                Expr::implies(Expr::not(cond.clone()), b),
            ])
        }
        Instr::While {
            cond,
            body,
            invariant,
        } => {
            let keep = wp_block(invariant, body, fresh);
            let rho = renaming(&modified_vars(body), fresh);
            let preserve = Expr::implies(Expr::and([invariant.clone(), cond.clone()]), keep);
            let exit = Expr::implies(
                Expr::and([invariant.clone(), Expr::not(cond.clone())]),
                f.clone(),
            );
            Expr::and([invariant.clone(), preserve.subst(&rho), exit.subst(&rho)])
        }
    }
}

/// Strongest postcondition of `f` with respect to a program, loops summarized by their invariants.
pub fn sp(f: &Formula, p: &Program) -> Formula {
    sp_block(f, &p.body, &mut FreshNames::for_program(p))
}

pub fn sp_block(f: &Formula, block: &[Instr], fresh: &mut FreshNames) -> Formula {
    block
        .iter()
        .fold(f.clone(), |pre, instr| sp_instr(&pre, instr, fresh))
}

fn sp_instr(f: &Formula, instr: &Instr, fresh: &mut FreshNames) -> Formula {
    match instr {
        Instr::Assign(x, e) => {
            let old = Expr::Var(fresh.var(x));
            Expr::and([
                f.subst1(&x.name, &old),
                Expr::eq(Expr::Var(x.clone()), e.subst1(&x.name, &old)),
            ])
        }
        Instr::Havoc(x) => f.subst1(&x.name, &Expr::Var(fresh.var(x))),
        Instr::Assume(g) => Expr::and([f.clone(), g.clone()]),
        Instr::Assert(_) => f.clone(),
        Instr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let a = sp_block(&Expr::and([f.clone(), cond.clone()]), then_branch, fresh);
            let b = sp_block(
                &Expr::and([f.clone(), Expr::not(cond.clone())]),
                else_branch,
                fresh,
            );
            Expr::or([a, b])
        }
        Instr::While {
            cond, invariant, ..
        } => Expr::and([invariant.clone(), Expr::not(cond.clone())]),
    }
}

/// Shorthand used by callers that hold a bare block.
pub fn wp_of(f: &Formula, block: &Block, symbols: &SymbolTable) -> Formula {
    wp_block(f, block, &mut FreshNames::new(symbols))
}

pub fn sp_of(f: &Formula, block: &Block, symbols: &SymbolTable) -> Formula {
    sp_block(f, block, &mut FreshNames::new(symbols))
}
