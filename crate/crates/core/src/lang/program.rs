use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::expr::{Expr, Formula, Sort, Var};
use super::location::Location;
use super::LangError;

/// Character that user identifiers can never contain; every generated
/// symbol carries it, so generated and declared names cannot collide.
pub const RESERVED_MARK: char = '!';

pub fn is_reserved(name: &str) -> bool {
    name.contains(RESERVED_MARK)
}

/// Name of the program variable a generated name was derived from.
pub fn base_name(name: &str) -> &str {
    name.split(RESERVED_MARK).next().unwrap_or(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunSig {
    pub args: Vec<Sort>,
    pub result: Sort,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    vars: BTreeMap<String, Sort>,
    funs: BTreeMap<String, FunSig>,
    fresh: usize,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable. Returns false if the name is already taken.
    pub fn declare_var(&mut self, name: &str, sort: Sort) -> bool {
        if self.is_declared(name) {
            return false;
        }
        self.vars.insert(name.to_string(), sort);
        true
    }

    pub fn declare_fun(&mut self, name: &str, sig: FunSig) -> bool {
        if self.is_declared(name) {
            return false;
        }
        self.funs.insert(name.to_string(), sig);
        true
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.vars.contains_key(name) || self.funs.contains_key(name)
    }

    pub fn var_sort(&self, name: &str) -> Option<Sort> {
        self.vars.get(name).copied()
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.var_sort(name).map(|s| Var::new(name, s))
    }

    pub fn fun(&self, name: &str) -> Option<&FunSig> {
        self.funs.get(name)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.vars.iter().map(|(n, s)| Var::new(n.clone(), *s))
    }

    /// Declared variables that were written by the user (no generated names).
    pub fn user_vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.vars().filter(|v| !is_reserved(&v.name))
    }

    pub fn funs(&self) -> impl Iterator<Item = (&str, &FunSig)> {
        self.funs.iter().map(|(n, s)| (n.as_str(), s))
    }

    /// Declares a new program variable with a reserved name derived from `base`.
    pub fn fresh_var(&mut self, base: &str, sort: Sort) -> Var {
        loop {
            let name = format!("{base}{RESERVED_MARK}{}", self.fresh);
            self.fresh += 1;
            if self.declare_var(&name, sort) {
                return Var::new(name, sort);
            }
        }
    }
}

/// A sequence of instructions.
pub type Block = Vec<Instr>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instr {
    Assign(Var, Expr),
    Havoc(Var),
    Assume(Formula),
    Assert(Formula),
    If {
        cond: Formula,
        then_branch: Block,
        else_branch: Block,
    },
    While {
        cond: Formula,
        body: Block,
        invariant: Formula,
    },
}

impl Instr {
    pub fn is_loop(&self) -> bool {
        matches!(self, Instr::While { .. })
    }

    /// The sub-block selected by a branch digit (1 = then/body, 2 = else).
    pub fn branch(&self, digit: usize) -> Option<&Block> {
        match (self, digit) {
            (Instr::If { then_branch, .. }, 1) => Some(then_branch),
            (Instr::If { else_branch, .. }, 2) => Some(else_branch),
            (Instr::While { body, .. }, 1) => Some(body),
            _ => None,
        }
    }

    fn branch_mut(&mut self, digit: usize) -> Option<&mut Block> {
        match (self, digit) {
            (Instr::If { then_branch, .. }, 1) => Some(then_branch),
            (Instr::If { else_branch, .. }, 2) => Some(else_branch),
            (Instr::While { body, .. }, 1) => Some(body),
            _ => None,
        }
    }
}

/// Variables possibly written by a block (assignments and havocs, recursively).
pub fn modified_vars(block: &[Instr]) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    collect_modified(block, &mut out);
    out
}

fn collect_modified(block: &[Instr], out: &mut BTreeSet<Var>) {
    for instr in block {
        match instr {
            Instr::Assign(v, _) | Instr::Havoc(v) => {
                out.insert(v.clone());
            }
            Instr::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_modified(then_branch, out);
                collect_modified(else_branch, out);
            }
            Instr::While { body, .. } => collect_modified(body, out),
            Instr::Assume(_) | Instr::Assert(_) => {}
        }
    }
}

/// Every formula or term mentioned by a block, including nested conditions,
/// assigned terms and loop invariants.
pub fn block_exprs(block: &[Instr]) -> Vec<&Expr> {
    let mut out = Vec::new();
    collect_exprs(block, &mut out);
    out
}

fn collect_exprs<'a>(block: &'a [Instr], out: &mut Vec<&'a Expr>) {
    for instr in block {
        match instr {
            Instr::Assign(_, e) | Instr::Assume(e) | Instr::Assert(e) => out.push(e),
            Instr::Havoc(_) => {}
            Instr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                out.push(cond);
                collect_exprs(then_branch, out);
                collect_exprs(else_branch, out);
            }
            Instr::While {
                cond,
                body,
                invariant,
            } => {
                out.push(cond);
                out.push(invariant);
                collect_exprs(body, out);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub body: Block,
    pub symbols: SymbolTable,
    /// Global assumptions about the declared function symbols.
    pub axioms: Vec<Formula>,
}

impl Program {
    pub fn new(body: Block, symbols: SymbolTable) -> Self {
        Program {
            body,
            symbols,
            axioms: Vec::new(),
        }
    }

    /// Conjunction of the declared axioms.
    pub fn axiom(&self) -> Formula {
        Expr::and(self.axioms.iter().cloned())
    }
}

/// All locations of a program.
pub fn locations(p: &Program) -> BTreeSet<Location> {
    let mut out = BTreeSet::new();
    block_locations(&p.body, &Location::root(), &mut out);
    out
}

fn block_locations(block: &[Instr], prefix: &Location, out: &mut BTreeSet<Location>) {
    for (i, instr) in block.iter().enumerate() {
        let here = prefix.child(i);
        match instr {
            Instr::If {
                then_branch,
                else_branch,
                ..
            } => {
                block_locations(then_branch, &here.child(1), out);
                block_locations(else_branch, &here.child(2), out);
            }
            Instr::While { body, .. } => block_locations(body, &here.child(1), out),
            _ => {}
        }
        out.insert(here);
    }
    out.insert(prefix.child(block.len()));
}

/// The instruction occurring just after `loc`, or `None` at the end of a sequence.
pub fn instruction_at<'a>(p: &'a Program, loc: &Location) -> Result<Option<&'a Instr>, LangError> {
    let (block, i) = resolve_vec(&p.body, loc.digits())
        .ok_or_else(|| LangError::InvalidLocation(loc.clone()))?;
    Ok(block.get(i))
}

pub(crate) fn resolve_vec<'a>(block: &'a Block, loc: &[usize]) -> Option<(&'a Block, usize)> {
    match loc {
        [] => None,
        [i] if *i <= block.len() => Some((block, *i)),
        [i, b, rest @ ..] => resolve_vec(block.get(*i)?.branch(*b)?, rest),
        _ => None,
    }
}

fn resolve_vec_mut<'a>(block: &'a mut Block, loc: &[usize]) -> Option<(&'a mut Block, usize)> {
    match loc {
        [] => None,
        [i] if *i <= block.len() => Some((block, *i)),
        [i, b, rest @ ..] => resolve_vec_mut(block.get_mut(*i)?.branch_mut(*b)?, rest),
        _ => None,
    }
}

/// Locations of all loops, in location order.
pub fn loop_locations(p: &Program) -> Vec<Location> {
    locations(p)
        .into_iter()
        .filter(|l| matches!(instruction_at(p, l), Ok(Some(i)) if i.is_loop()))
        .collect()
}

/// Condition, body and invariant of the loop at `loc`.
pub fn loop_at<'a>(
    p: &'a Program,
    loc: &Location,
) -> Result<(&'a Formula, &'a Block, &'a Formula), LangError> {
    match instruction_at(p, loc) {
        Ok(Some(Instr::While {
            cond,
            body,
            invariant,
        })) => Ok((cond, body, invariant)),
        _ => Err(LangError::NotALoop(loc.clone())),
    }
}

/// Returns a copy of `p` whose loop at `loc` carries exactly `invariant`.
pub fn set_invariant(p: &Program, loc: &Location, invariant: Formula) -> Result<Program, LangError> {
    let mut out = p.clone();
    let slot = resolve_vec_mut(&mut out.body, loc.digits())
        .and_then(|(block, i)| block.get_mut(i))
        .ok_or_else(|| LangError::NotALoop(loc.clone()))?;
    match slot {
        Instr::While { invariant: inv, .. } => {
            *inv = invariant;
            Ok(out)
        }
        _ => Err(LangError::NotALoop(loc.clone())),
    }
}

/// True iff the two programs coincide once every loop invariant is replaced by `true`.
pub fn equiv_mod_invariants(p: &Program, q: &Program) -> bool {
    p.symbols == q.symbols && p.axioms == q.axioms && erase_block(&p.body) == erase_block(&q.body)
}

fn erase_block(block: &[Instr]) -> Block {
    block
        .iter()
        .map(|instr| match instr {
            Instr::If {
                cond,
                then_branch,
                else_branch,
            } => Instr::If {
                cond: cond.clone(),
                then_branch: erase_block(then_branch),
                else_branch: erase_block(else_branch),
            },
            Instr::While { cond, body, .. } => Instr::While {
                cond: cond.clone(),
                body: erase_block(body),
                invariant: Expr::tt(),
            },
            other => other.clone(),
        })
        .collect()
}

/// All loop invariants keyed by location.
pub fn invariants(p: &Program) -> BTreeMap<Location, Formula> {
    loop_locations(p)
        .into_iter()
        .filter_map(|l| loop_at(p, &l).ok().map(|(_, _, inv)| (l.clone(), inv.clone())))
        .collect()
}
