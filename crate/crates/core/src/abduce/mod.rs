//! Abductive hypothesis generation: candidate literals, implicant search and
//! assembly of the strengthening candidates for one verification condition.

mod gpid;
mod pool;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Expr, Formula, Location, Program};
use crate::solver::{Entailment, SolverError, SolverSession};
use crate::vc::Vc;

pub use gpid::{gpid, Gpid, Hypothesis};
pub use pool::{
    get_abducibles, scope, select_abducibles, Abducible, AbduciblePool, PoolRecipe, PriorityClass,
    Universe,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_size: usize,
    pub max_depth: usize,
    /// 1 or 2.
    pub disjuncts: usize,
    pub node_limit: usize,
    /// Longest chain of strengthenings the orchestrator may stack at this level.
    pub max_strengthenings: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_size: 1,
            max_depth: 1,
            disjuncts: 2,
            node_limit: 5000,
            max_strengthenings: 3,
        }
    }
}

impl SearchBudget {
    pub fn new(max_size: usize, max_depth: usize) -> Self {
        SearchBudget {
            max_size,
            max_depth,
            ..Default::default()
        }
    }

    /// The size bound, which every subset of an admissible set also meets.
    pub fn admits(&self, h: &Hypothesis) -> bool {
        h.size() <= self.max_size
    }
}

#[derive(Debug, Error)]
pub enum AbduceError {
    #[error("search node limit reached")]
    BudgetExhausted,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Does `h` entail `k`, reading both as conjunctions of pool literals?
fn implies(h: &Hypothesis, k: &Hypothesis, pool: &AbduciblePool, sess: &mut SolverSession) -> Result<bool, SolverError> {
    if k.is_subset_of(h) {
        return Ok(true);
    }
    let hyp: Vec<Formula> = h.literals.iter().map(|&i| pool.get(i).literal.clone()).collect();
    sess.proves(&hyp, &k.formula(pool))
}

/// Removes every hypothesis that entails another one; mutual entailment keeps the
/// smaller, then the earlier. The survivors keep their input order.
pub fn prune_redundant(
    hs: &[Hypothesis],
    pool: &AbduciblePool,
    sess: &mut SolverSession,
) -> Result<Vec<Hypothesis>, SolverError> {
    let mut order: Vec<usize> = (0..hs.len()).collect();
    order.sort_by_key(|&i| (hs[i].size(), i));
    let mut kept: Vec<usize> = Vec::new();
    'next: for i in order {
        for &k in &kept {
            if implies(&hs[i], &hs[k], pool, sess)? {
                continue 'next;
            }
        }
        let mut survivors = Vec::with_capacity(kept.len() + 1);
        for &k in &kept {
            if !implies(&hs[k], &hs[i], pool, sess)? {
                survivors.push(k);
            }
        }
        survivors.push(i);
        kept = survivors;
    }
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| hs[i].clone()).collect())
}

/// The candidates produced for one condition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abduction {
    pub candidates: Vec<Formula>,
    pub pool_size: usize,
    pub implicants: usize,
    /// The node limit cut the search short.
    pub exhausted: bool,
}

/// Formulas `ξ` over program variables such that `ξ`, read at the head of loop `l`,
/// makes `goal` valid. Units come first; with two disjuncts allowed, pairwise
/// disjunctions of the conjunctive candidates follow.
pub fn abduce(
    goal: &Vc,
    p: &Program,
    l: &Location,
    budget: &SearchBudget,
    sess: &mut SolverSession,
) -> Result<Abduction, SolverError> {
    abduce_in(&Universe::new(p, budget.max_depth), goal, p, l, budget, sess)
}

/// [`abduce`] over a universe built beforehand.
pub fn abduce_in(
    universe: &Universe,
    goal: &Vc,
    p: &Program,
    l: &Location,
    budget: &SearchBudget,
    sess: &mut SolverSession,
) -> Result<Abduction, SolverError> {
    let pool = select_abducibles(universe, p, l, goal, sess)?;
    let mut found = Vec::new();
    let mut exhausted = false;
    for item in gpid(&goal.formula(), Hypothesis::default(), &pool, budget, sess) {
        match item {
            Ok(h) => found.push(h),
            Err(AbduceError::BudgetExhausted) => exhausted = true,
            Err(AbduceError::Solver(e)) => return Err(e),
        }
    }
    let implicants = found.len();
    let mut hs = prune_redundant(&found, &pool, sess)?;
    hs.sort_by_key(|h| h.size() > 1);

    let axiom = p.axiom();
    let mut conj = Vec::new();
    for h in &hs {
        let f = h.formula(&pool);
        if is_trivial(&f, &axiom, sess)? {
            continue;
        }
        conj.push(f);
    }
    let mut candidates = conj.clone();
    if budget.disjuncts >= 2 {
        for i in 0..conj.len() {
            for j in i + 1..conj.len() {
                let d = Expr::or([conj[i].clone(), conj[j].clone()]);
                if !is_trivial(&d, &axiom, sess)? {
                    candidates.push(d);
                }
            }
        }
    }
    Ok(Abduction {
        candidates,
        pool_size: pool.len(),
        implicants,
        exhausted,
    })
}

/// Valid or unsatisfiable modulo the axioms.
fn is_trivial(f: &Formula, axiom: &Formula, sess: &mut SolverSession) -> Result<bool, SolverError> {
    if f.is_true() || f.is_false() {
        return Ok(true);
    }
    if sess.proves(std::slice::from_ref(axiom), f)? {
        return Ok(true);
    }
    Ok(sess.check_sat(&[axiom.clone(), f.clone()], false)?.is_unsat())
}

/// One line per hypothesis: the solver's verdict on `h ⊨ goal`, then its literals in pool order.
pub fn debug_dump(
    hs: &[Hypothesis],
    pool: &AbduciblePool,
    goal: &Formula,
    sess: &mut SolverSession,
) -> Result<String, SolverError> {
    let mut out = String::new();
    for h in hs {
        let verdict = match sess.entails(&h.instances(pool), goal)? {
            Entailment::Yes => "valid",
            Entailment::No(_) => "invalid",
            Entailment::Unknown(_) => "unknown",
        };
        let lits: Vec<String> = h
            .literals
            .iter()
            .map(|&i| pool.get(i).literal.to_string())
            .collect();
        out.push_str(&format!("{verdict}: {}\n", lits.join(", ")));
    }
    Ok(out)
}
