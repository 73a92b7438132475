use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lang::{
    base_name, block_exprs, is_reserved, loop_at, modified_vars, CmpOp, Expr, Formula, FunSig,
    Location, Program, Sort, Var,
};
use crate::parser::render_expr;
use crate::solver::{SolverResult, SolverSession};
use crate::vc::Vc;

use super::SearchBudget;

/// Priority classes, in the order they are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PriorityClass {
    BoolVar,
    Equation,
    Predicate,
    Deep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abducible {
    /// The literal over program variables.
    pub literal: Formula,
    /// Position in the heuristic order of the pool it belongs to.
    pub rank: usize,
    pub depth: usize,
    pub class: PriorityClass,
    /// The literal as seen by the solver for the current goal (read at the loop head).
    pub instance: Formula,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolRecipe {
    pub vars: Vec<Var>,
    pub functions: Vec<(String, FunSig)>,
    pub constants: Vec<i64>,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbduciblePool {
    pub items: Vec<Abducible>,
    pub recipe: PoolRecipe,
}

impl AbduciblePool {
    /// A pool over explicit literals, used as-is for the solver.
    pub fn from_literals(literals: impl IntoIterator<Item = Formula>) -> Self {
        let items = literals
            .into_iter()
            .enumerate()
            .map(|(rank, literal)| Abducible {
                depth: literal.term_depth(),
                class: PriorityClass::Predicate,
                instance: literal.clone(),
                literal,
                rank,
            })
            .collect();
        AbduciblePool {
            items,
            recipe: PoolRecipe::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Abducible {
        &self.items[i]
    }
}

/// The candidate literals of a whole program, built once and narrowed per location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    pub recipe: PoolRecipe,
    literals: Vec<(PriorityClass, usize, Formula)>,
}

impl Universe {
    pub fn new(p: &Program, max_depth: usize) -> Self {
        let vars: Vec<Var> = p.symbols.user_vars().collect();
        let functions: Vec<(String, FunSig)> = p
            .symbols
            .funs()
            .map(|(n, s)| (n.to_string(), s.clone()))
            .collect();
        let mut constants: BTreeSet<i64> = BTreeSet::from([0, 1]);
        for e in block_exprs(&p.body).into_iter().chain(&p.axioms) {
            constants.extend(e.int_literals());
        }
        let recipe = PoolRecipe {
            vars,
            functions,
            constants: constants.into_iter().collect(),
            max_depth,
        };
        let literals = generate(&recipe);
        Universe { recipe, literals }
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// The literals whose variables all lie in `scope`, in heuristic order.
    pub fn select(&self, scope: &BTreeSet<String>) -> Vec<(PriorityClass, usize, Formula)> {
        self.literals
            .iter()
            .filter(|(_, _, l)| l.vars().iter().all(|v| scope.contains(&v.name)))
            .cloned()
            .collect()
    }
}

fn negate(atom: &Formula) -> Formula {
    match atom {
        Expr::Cmp(op, a, b) => Expr::Cmp(op.negated(), a.clone(), b.clone()),
        other => Expr::not(other.clone()),
    }
}

fn push_class(out: &mut Vec<(PriorityClass, usize, Formula)>, class: PriorityClass, atoms: Vec<Formula>) {
    let mut keyed: Vec<(String, Formula)> = atoms
        .into_iter()
        .map(|a| (render_expr(&a), a))
        .collect();
    keyed.sort();
    keyed.dedup_by(|a, b| a.0 == b.0);
    for (_, atom) in keyed {
        let depth = atom.term_depth();
        let neg = negate(&atom);
        out.push((class, depth, atom));
        out.push((class, depth, neg));
    }
}

fn generate(r: &PoolRecipe) -> Vec<(PriorityClass, usize, Formula)> {
    let ints: Vec<Expr> = r
        .vars
        .iter()
        .filter(|v| v.sort == Sort::Int)
        .map(|v| Expr::Var(v.clone()))
        .collect();
    let bools: Vec<Expr> = r
        .vars
        .iter()
        .filter(|v| v.sort == Sort::Bool)
        .map(|v| Expr::Var(v.clone()))
        .collect();
    let consts: Vec<Expr> = r.constants.iter().map(|c| Expr::int(*c)).collect();
    let shallow: Vec<Expr> = ints.iter().chain(&consts).cloned().collect();

    let mut out = Vec::new();
    push_class(&mut out, PriorityClass::BoolVar, bools.clone());

    let mut eqs = Vec::new();
    for (i, x) in ints.iter().enumerate() {
        for y in &ints[i + 1..] {
            eqs.push(Expr::eq(x.clone(), y.clone()));
        }
        for c in &consts {
            eqs.push(Expr::eq(x.clone(), c.clone()));
        }
    }
    for (i, a) in bools.iter().enumerate() {
        for b in &bools[i + 1..] {
            eqs.push(Expr::eq(a.clone(), b.clone()));
        }
    }
    push_class(&mut out, PriorityClass::Equation, eqs);

    let mut preds = Vec::new();
    for (i, x) in ints.iter().enumerate() {
        for y in ints[i + 1..].iter().chain(&consts) {
            preds.push(Expr::le(x.clone(), y.clone()));
            preds.push(Expr::ge(x.clone(), y.clone()));
        }
    }
    for (name, sig) in &r.functions {
        if sig.result == Sort::Bool {
            for args in arg_tuples(&sig.args, &shallow, &bools) {
                preds.push(Expr::App(name.clone(), args, Sort::Bool));
            }
        }
    }
    push_class(&mut out, PriorityClass::Predicate, preds);

    if r.max_depth >= 2 {
        let mut deep = Vec::new();
        let steps: Vec<i64> = r
            .constants
            .iter()
            .map(|c| c.unsigned_abs() as i64)
            .filter(|c| *c != 0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for v in &ints {
            let others: Vec<&Expr> = ints.iter().filter(|w| *w != v).collect();
            let mut terms = Vec::new();
            for c in &steps {
                terms.push(Expr::add(v.clone(), Expr::int(*c)));
                terms.push(Expr::sub(v.clone(), Expr::int(*c)));
                if *c != 1 {
                    terms.push(Expr::mul(Expr::int(*c), v.clone()));
                }
            }
            for t in terms {
                for w in &others {
                    compare_all(&mut deep, &t, w);
                }
            }
        }
        let mut wide = Vec::new();
        for (i, v) in ints.iter().enumerate() {
            for w in &ints[i + 1..] {
                wide.push(Expr::add(v.clone(), w.clone()));
            }
        }
        for (name, sig) in &r.functions {
            if sig.result == Sort::Int {
                for args in arg_tuples(&sig.args, &shallow, &bools) {
                    wide.push(Expr::App(name.clone(), args, Sort::Int));
                }
            }
        }
        for t in wide {
            let inside = t.vars();
            for s in &shallow {
                if let Expr::Var(v) = s {
                    if inside.contains(v) {
                        continue;
                    }
                }
                compare_all(&mut deep, &t, s);
            }
        }
        push_class(&mut out, PriorityClass::Deep, deep);
    }
    out
}

fn compare_all(out: &mut Vec<Formula>, t: &Expr, s: &Expr) {
    for op in [CmpOp::Eq, CmpOp::Le, CmpOp::Ge] {
        out.push(Expr::cmp(op, t.clone(), s.clone()));
    }
}

fn arg_tuples(sorts: &[Sort], ints: &[Expr], bools: &[Expr]) -> Vec<Vec<Expr>> {
    let mut acc: Vec<Vec<Expr>> = vec![Vec::new()];
    for s in sorts {
        let choices = match s {
            Sort::Int => ints,
            Sort::Bool => bools,
        };
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |c| {
                    let mut next = prefix.clone();
                    next.push(c.clone());
                    next
                })
            })
            .collect();
    }
    acc
}

/// Program variables relevant at `l` for `goal`: those of the condition and those of the loop.
pub fn scope(p: &Program, l: &Location, goal: &Vc) -> BTreeSet<String> {
    let mut names: BTreeSet<String> = goal
        .antecedent
        .vars()
        .into_iter()
        .chain(goal.consequent.vars())
        .map(|v| base_name(&v.name).to_string())
        .collect();
    if let Ok((cond, body, inv)) = loop_at(p, l) {
        names.extend(cond.vars().into_iter().map(|v| v.name));
        names.extend(inv.vars().into_iter().map(|v| v.name));
        names.extend(modified_vars(body).into_iter().map(|v| v.name));
        for e in block_exprs(body) {
            names.extend(e.vars().into_iter().map(|v| v.name));
        }
    }
    names.retain(|n| !is_reserved(n) && p.symbols.var_sort(n).is_some());
    names
}

/// Narrows a program-wide universe to the literals useful for `goal` at loop `l`,
/// dropping those already entailed by the condition's antecedent.
pub fn select_abducibles(
    universe: &Universe,
    p: &Program,
    l: &Location,
    goal: &Vc,
    sess: &mut SolverSession,
) -> SolverResult<AbduciblePool> {
    let scope = scope(p, l, goal);
    let mut items = Vec::new();
    for (class, depth, literal) in universe.select(&scope) {
        let instance = goal.at_loop(l, &literal);
        if sess.proves(std::slice::from_ref(&goal.antecedent), &instance)? {
            continue;
        }
        items.push(Abducible {
            literal,
            rank: items.len(),
            depth,
            class,
            instance,
        });
    }
    Ok(AbduciblePool {
        items,
        recipe: universe.recipe.clone(),
    })
}

/// Builds the pool for `goal` at loop `l` from scratch.
pub fn get_abducibles(
    p: &Program,
    l: &Location,
    goal: &Vc,
    budget: &SearchBudget,
    sess: &mut SolverSession,
) -> SolverResult<AbduciblePool> {
    select_abducibles(&Universe::new(p, budget.max_depth), p, l, goal, sess)
}
