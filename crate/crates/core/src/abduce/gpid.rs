use serde::{Deserialize, Serialize};

use crate::lang::{Expr, Formula};
use crate::solver::{SatResult, SolverSession, Value};

use super::{AbduceError, AbduciblePool, SearchBudget};

/// A conjunction of pool literals, stored as sorted pool indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    pub literals: Vec<usize>,
}

impl Hypothesis {
    pub fn new(mut literals: Vec<usize>) -> Self {
        literals.sort_unstable();
        literals.dedup();
        Hypothesis { literals }
    }

    pub fn size(&self) -> usize {
        self.literals.len()
    }

    pub fn is_subset_of(&self, other: &Hypothesis) -> bool {
        self.literals.iter().all(|i| other.literals.binary_search(i).is_ok())
    }

    fn with(&self, i: usize) -> Hypothesis {
        let mut lits = self.literals.clone();
        lits.push(i);
        Hypothesis::new(lits)
    }

    /// The conjunction over program variables.
    pub fn formula(&self, pool: &AbduciblePool) -> Formula {
        Expr::and(self.literals.iter().map(|&i| pool.get(i).literal.clone()))
    }

    /// The conjunction as read by the solver against the goal.
    pub fn instances(&self, pool: &AbduciblePool) -> Vec<Formula> {
        self.literals.iter().map(|&i| pool.get(i).instance.clone()).collect()
    }
}

struct Node {
    m: Hypothesis,
    a: Vec<usize>,
}

/// Depth-first implicant search over a pool, yielding hypotheses as they are found.
pub struct Gpid<'a> {
    neg_goal: Formula,
    pool: &'a AbduciblePool,
    budget: SearchBudget,
    sess: &'a mut SolverSession,
    stack: Vec<Node>,
    nodes: usize,
    done: bool,
}

/// Implicants of `goal` extending `m` with literals of `pool`.
pub fn gpid<'a>(
    goal: &Formula,
    m: Hypothesis,
    pool: &'a AbduciblePool,
    budget: &SearchBudget,
    sess: &'a mut SolverSession,
) -> Gpid<'a> {
    let a = (0..pool.len()).filter(|i| !m.literals.contains(i)).collect();
    Gpid {
        neg_goal: Expr::not(goal.clone()),
        pool,
        budget: budget.clone(),
        sess,
        stack: vec![Node { m, a }],
        nodes: 0,
        done: false,
    }
}

impl Gpid<'_> {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn holds(&self, lit: usize, values: Option<&[Value]>) -> bool {
        matches!(values.and_then(|v| v.get(lit)), Some(Value::Bool(true)))
    }

    /// Expands one node; returns a hypothesis when the node is an implicant.
    fn visit(&mut self, node: Node) -> Result<Option<Hypothesis>, AbduceError> {
        let Node { m, a } = node;
        if m.size() > self.budget.max_size {
            return Ok(None);
        }
        let mut q = m.instances(self.pool);
        q.push(self.neg_goal.clone());
        let want_children = m.size() < self.budget.max_size;
        let terms: Vec<Formula> = if want_children {
            self.pool.items.iter().map(|x| x.instance.clone()).collect()
        } else {
            Vec::new()
        };
        let res = self.sess.check_sat_eval(&q, want_children, &terms)?;
        let values: Option<Vec<Value>> = match res {
            SatResult::Unsat => {
                if m.size() == 0 {
                    return Ok(Some(m));
                }
                let consistent = self.sess.check_sat(&m.instances(self.pool), false)?;
                return Ok((!consistent.is_unsat()).then_some(m));
            }
            SatResult::Sat(model) => model.map(|md| md.terms),
            SatResult::Unknown(_) => None,
        };
        if !want_children {
            return Ok(None);
        }
        let values = values.as_deref();
        let leaves = m.size() + 1 == self.budget.max_size;
        let mut kept = Vec::with_capacity(a.len());
        for &l in &a {
            if leaves || self.relevant(&m, l, values)? {
                kept.push(l);
            }
        }
        let mut children = Vec::new();
        for (pos, &l) in kept.iter().enumerate() {
            if self.holds(l, values) {
                continue;
            }
            let a_l: Vec<usize> = kept[..pos]
                .iter()
                .copied()
                .filter(|&x| self.holds(x, values))
                .chain(kept[pos + 1..].iter().copied())
                .collect();
            children.push(Node { m: m.with(l), a: a_l });
        }
        self.stack.extend(children.into_iter().rev());
        Ok(None)
    }

    /// False when `l` can be discarded under `m`: either `m ∧ ¬goal` already forces it,
    /// or `m` already contradicts it.
    fn relevant(&mut self, m: &Hypothesis, l: usize, values: Option<&[Value]>) -> Result<bool, AbduceError> {
        let lit = self.pool.get(l).instance.clone();
        let mut base = m.instances(self.pool);
        let known = values.and_then(|v| v.get(l)).is_some();
        let forced = || {
            let mut q = base.clone();
            q.push(self.neg_goal.clone());
            q.push(Expr::not(lit.clone()));
            q
        };
        if (!known || self.holds(l, values))
            && self.sess.check_sat(&forced(), false)?.is_unsat() {
                return Ok(false);
            }
        if !known || !self.holds(l, values) {
            base.push(lit.clone());
            if self.sess.check_sat(&base, false)?.is_unsat() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Iterator for Gpid<'_> {
    type Item = Result<Hypothesis, AbduceError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let node = self.stack.pop()?;
            if self.nodes >= self.budget.node_limit {
                self.done = true;
                return Some(Err(AbduceError::BudgetExhausted));
            }
            self.nodes += 1;
            match self.visit(node) {
                Ok(Some(h)) => return Some(Ok(h)),
                Ok(None) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}
