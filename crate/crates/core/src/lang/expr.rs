//! Sorted quantifier-free terms over integers, booleans and uninterpreted symbols.
//!
//! A single [`Expr`] type covers both integer terms and formulas; a
//! [`Formula`] is simply a boolean-sorted `Expr`. Every variable and
//! application carries its sort, so a formula can be declared to a solver
//! without consulting the symbol table it came from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// The two built-in sorts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Int,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("int"),
            Sort::Bool => f.write_str("bool"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The comparison that holds exactly when `self` does not.
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// Only `=` and `!=` accept boolean operands.
    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

/// A sorted variable occurrence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var {
            name: name.into(),
            sort,
        }
    }

    pub fn int(name: impl Into<String>) -> Self {
        Var::new(name, Sort::Int)
    }

    pub fn bool(name: impl Into<String>) -> Self {
        Var::new(name, Sort::Bool)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Expr {
    BoolLit(bool),
    IntLit(i64),
    Var(Var),
    /// Application of a declared function symbol; the last field is the result sort.
    App(String, Vec<Expr>, Sort),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
}

/// A boolean-sorted [`Expr`].
pub type Formula = Expr;

/// Simultaneous substitution of variables by terms, keyed by variable name.
pub type Subst = BTreeMap<String, Expr>;

impl Expr {
    pub fn tt() -> Expr {
        Expr::BoolLit(true)
    }

    pub fn ff() -> Expr {
        Expr::BoolLit(false)
    }

    pub fn int(n: i64) -> Expr {
        Expr::IntLit(n)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn int_var(name: &str) -> Expr {
        Expr::Var(Var::int(name))
    }

    pub fn bool_var(name: &str) -> Expr {
        Expr::Var(Var::bool(name))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::BoolLit(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Expr::BoolLit(false))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Expr::IntLit(_) | Expr::Arith(..) => Sort::Int,
            Expr::Var(v) => v.sort,
            Expr::App(_, _, s) => *s,
            _ => Sort::Bool,
        }
    }

    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, lhs, rhs)
    }

    pub fn le(lhs: Expr, rhs: Expr) -> Expr {
        Expr::cmp(CmpOp::Le, lhs, rhs)
    }

    pub fn lt(lhs: Expr, rhs: Expr) -> Expr {
        Expr::cmp(CmpOp::Lt, lhs, rhs)
    }

    pub fn ge(lhs: Expr, rhs: Expr) -> Expr {
        Expr::cmp(CmpOp::Ge, lhs, rhs)
    }

    pub fn gt(lhs: Expr, rhs: Expr) -> Expr {
        Expr::cmp(CmpOp::Gt, lhs, rhs)
    }

    pub fn arith(op: ArithOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Arith(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(lhs: Expr, rhs: Expr) -> Expr {
        Expr::arith(ArithOp::Add, lhs, rhs)
    }

    pub fn sub(lhs: Expr, rhs: Expr) -> Expr {
        Expr::arith(ArithOp::Sub, lhs, rhs)
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Expr {
        Expr::arith(ArithOp::Mul, lhs, rhs)
    }

    /// Negation with double-negation and constant folding.
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::BoolLit(b) => Expr::BoolLit(!b),
            Expr::Not(inner) => *inner,
            other => Expr::Not(Box::new(other)),
        }
    }

    /// Conjunction that flattens nested conjunctions, drops `true` and
    /// collapses on `false`.
    pub fn and(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for item in items {
            match item {
                Expr::BoolLit(true) => {}
                Expr::BoolLit(false) => return Expr::ff(),
                Expr::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        let mut seen = BTreeSet::new();
        out.retain(|e| seen.insert(e.clone()));
        match out.len() {
            0 => Expr::tt(),
            1 => out.pop().unwrap(),
            _ => Expr::And(out),
        }
    }

    /// Disjunction, dual of [`Expr::and`].
    pub fn or(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut out = Vec::new();
        for item in items {
            match item {
                Expr::BoolLit(false) => {}
                Expr::BoolLit(true) => return Expr::tt(),
                Expr::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        let mut seen = BTreeSet::new();
        out.retain(|e| seen.insert(e.clone()));
        match out.len() {
            0 => Expr::ff(),
            1 => out.pop().unwrap(),
            _ => Expr::Or(out),
        }
    }

    /// Implication with the obvious unit simplifications.
    pub fn implies(lhs: Expr, rhs: Expr) -> Expr {
        if lhs.is_true() {
            rhs
        } else if lhs.is_false() || rhs.is_true() {
            Expr::tt()
        } else if rhs.is_false() {
            Expr::not(lhs)
        } else {
            Expr::Implies(Box::new(lhs), Box::new(rhs))
        }
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<Expr> {
        match self {
            Expr::And(items) => items.iter().flat_map(|e| e.conjuncts()).collect(),
            Expr::BoolLit(true) => Vec::new(),
            other => vec![other.clone()],
        }
    }

    /// Conjunction with its `true` units removed (but otherwise unsimplified).
    pub fn drop_true_conjuncts(&self) -> Expr {
        match self {
            Expr::And(_) => {
                let items = self.conjuncts();
                match items.len() {
                    0 => Expr::tt(),
                    1 => items.into_iter().next().unwrap(),
                    _ => Expr::And(items),
                }
            }
            other => other.clone(),
        }
    }

    /// Applies the substitution simultaneously to every variable occurrence.
    pub fn subst(&self, map: &Subst) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Expr::BoolLit(_) | Expr::IntLit(_) => self.clone(),
            Expr::Var(v) => map.get(&v.name).cloned().unwrap_or_else(|| self.clone()),
            Expr::App(f, args, s) => {
                Expr::App(f.clone(), args.iter().map(|a| a.subst(map)).collect(), *s)
            }
            Expr::Not(e) => Expr::Not(Box::new(e.subst(map))),
            Expr::And(items) => Expr::And(items.iter().map(|e| e.subst(map)).collect()),
            Expr::Or(items) => Expr::Or(items.iter().map(|e| e.subst(map)).collect()),
            Expr::Implies(a, b) => Expr::Implies(Box::new(a.subst(map)), Box::new(b.subst(map))),
            Expr::Cmp(op, a, b) => Expr::Cmp(*op, Box::new(a.subst(map)), Box::new(b.subst(map))),
            Expr::Arith(op, a, b) => {
                Expr::Arith(*op, Box::new(a.subst(map)), Box::new(b.subst(map)))
            }
        }
    }

    /// Substitutes a single variable.
    pub fn subst1(&self, var: &str, by: &Expr) -> Expr {
        let mut map = Subst::new();
        map.insert(var.to_string(), by.clone());
        self.subst(&map)
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::BoolLit(_) | Expr::IntLit(_) | Expr::Var(_) => {}
            Expr::App(_, args, _) => args.iter().for_each(|a| a.walk(f)),
            Expr::Not(e) => e.walk(f),
            Expr::And(items) | Expr::Or(items) => items.iter().for_each(|e| e.walk(f)),
            Expr::Implies(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    /// Free variables, ordered by name.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                found |= v.name == name;
            }
        });
        found
    }

    /// Function symbols applied in the expression, with their argument and result sorts.
    pub fn functions(&self) -> BTreeSet<(String, Vec<Sort>, Sort)> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::App(f, args, s) = e {
                out.insert((f.clone(), args.iter().map(Expr::sort).collect(), *s));
            }
        });
        out
    }

    /// Integer literals occurring anywhere in the expression.
    pub fn int_literals(&self) -> BTreeSet<i64> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::IntLit(n) = e {
                out.insert(*n);
            }
        });
        out
    }

    /// Nesting depth of term constructors (variables and literals have depth 1).
    pub fn term_depth(&self) -> usize {
        match self {
            Expr::BoolLit(_) | Expr::IntLit(_) | Expr::Var(_) => 1,
            Expr::App(_, args, _) => 1 + args.iter().map(Expr::term_depth).max().unwrap_or(0),
            Expr::Not(e) => e.term_depth(),
            Expr::And(items) | Expr::Or(items) => {
                items.iter().map(Expr::term_depth).max().unwrap_or(1)
            }
            Expr::Implies(a, b) | Expr::Cmp(_, a, b) => a.term_depth().max(b.term_depth()),
            Expr::Arith(_, a, b) => 1 + a.term_depth().max(b.term_depth()),
        }
    }

    /// An atom, or the negation of one.
    pub fn is_literal(&self) -> bool {
        match self {
            Expr::Not(inner) => inner.is_atom(),
            other => other.is_atom(),
        }
    }

    pub fn is_atom(&self) -> bool {
        match self {
            Expr::Var(v) => v.sort == Sort::Bool,
            Expr::App(_, _, s) => *s == Sort::Bool,
            Expr::Cmp(..) | Expr::BoolLit(_) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render_expr(self))
    }
}
