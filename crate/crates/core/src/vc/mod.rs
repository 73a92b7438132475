//! Verification conditions: the wp/sp calculi and the split into assertion,
//! propagation and loop-entry conditions.
//!
//! Conditions are generated forward with `sp`. While walking, each loop whose
//! summary is still part of the current state keeps a [`Tap`]: a substitution
//! giving, in the current vocabulary, the value each program variable had at
//! that loop's head, plus a guard for the paths on which the summary applies.
//! A formula `ξ` over program variables added to that loop's invariant shows
//! up in the condition as `guard ⇒ ξ[subst]`, which is what abduction solves for.

mod calculus;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{Expr, Formula, Instr, Location, Program, Sort, Subst, Var};
use crate::solver::{Model, SatResult, SolverResult, SolverSession, UnknownReason};

pub use calculus::{is_generated, sp, sp_block, sp_of, wp, wp_block, wp_of, FreshNames};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VcKind {
    Assertion,
    Propagation,
    LoopPrecondition,
}

/// How a loop's head state is reachable from the end of a condition's antecedent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tap {
    pub guard: Formula,
    pub subst: Subst,
}

impl Tap {
    fn identity() -> Self {
        Tap {
            guard: Expr::tt(),
            subst: Subst::new(),
        }
    }

    fn rename(&mut self, x: &Var, old: &Expr) {
        for v in self.subst.values_mut() {
            *v = v.subst1(&x.name, old);
        }
        self.subst
            .entry(x.name.clone())
            .or_insert_with(|| old.clone());
        self.guard = self.guard.subst1(&x.name, old);
    }

    /// A formula over program variables, read at the loop head.
    pub fn instantiate(&self, f: &Formula) -> Formula {
        Expr::implies(self.guard.clone(), f.subst(&self.subst))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vc {
    pub id: String,
    pub kind: VcKind,
    pub antecedent: Formula,
    pub consequent: Formula,
    pub depends_on: BTreeSet<Location>,
    pub origin: Location,
    pub taps: BTreeMap<Location, Tap>,
}

impl Vc {
    /// `antecedent ⇒ consequent`.
    pub fn formula(&self) -> Formula {
        Expr::implies(self.antecedent.clone(), self.consequent.clone())
    }

    /// The dependency closest to the condition (the greatest location).
    pub fn closest_dependency(&self) -> Option<&Location> {
        self.depends_on.iter().next_back()
    }

    /// Reads `f` at the head of loop `l`, or as-is when `l` has no tap.
    pub fn at_loop(&self, l: &Location, f: &Formula) -> Formula {
        match self.taps.get(l) {
            Some(tap) => tap.instantiate(f),
            None => f.clone(),
        }
    }
}

impl fmt::Display for Vc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ==> {}", self.id, self.antecedent, self.consequent)
    }
}

/// The three families of conditions of a program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcSet {
    pub assertions: Vec<Vc>,
    pub propagation: BTreeMap<Location, Vec<Vc>>,
    pub init: BTreeMap<Location, Vc>,
}

impl VcSet {
    pub fn all(&self) -> impl Iterator<Item = &Vc> {
        self.assertions
            .iter()
            .chain(self.propagation.values().flatten())
            .chain(self.init.values())
    }

    pub fn len(&self) -> usize {
        self.all().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<&Vc> {
        self.all().find(|v| v.id == id)
    }

    pub fn propagation_at(&self, l: &Location) -> &[Vc] {
        self.propagation.get(l).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
struct State {
    f: Formula,
    deps: BTreeSet<Location>,
    taps: BTreeMap<Location, Tap>,
}

impl State {
    fn start() -> Self {
        State {
            f: Expr::tt(),
            deps: BTreeSet::new(),
            taps: BTreeMap::new(),
        }
    }

    fn loop_head(l: &Location, f: Formula) -> Self {
        State {
            f,
            deps: BTreeSet::from([l.clone()]),
            taps: BTreeMap::from([(l.clone(), Tap::identity())]),
        }
    }

    fn rename(&mut self, x: &Var, fresh: &mut FreshNames) -> Expr {
        let old = Expr::Var(fresh.var(x));
        self.f = self.f.subst1(&x.name, &old);
        for tap in self.taps.values_mut() {
            tap.rename(x, &old);
        }
        old
    }
}

struct Gen<'a> {
    axiom: Formula,
    fresh: FreshNames,
    out: &'a mut VcSet,
}

impl Gen<'_> {
    fn emit(&mut self, id: String, kind: VcKind, st: &State, consequent: Formula, origin: Location) {
        let vc = Vc {
            id,
            kind,
            antecedent: Expr::and([self.axiom.clone(), st.f.clone()]),
            consequent,
            depends_on: st.deps.clone(),
            origin,
            taps: st.taps.clone(),
        };
        match kind {
            VcKind::Assertion => self.out.assertions.push(vc),
            VcKind::Propagation => self.out.propagation.entry(vc.origin.clone()).or_default().push(vc),
            VcKind::LoopPrecondition => {
                self.out.init.insert(vc.origin.clone(), vc);
            }
        }
    }

    fn block(&mut self, block: &[Instr], prefix: &Location, mut st: State) -> State {
        for (i, instr) in block.iter().enumerate() {
            st = self.instr(instr, &prefix.child(i), st);
        }
        st
    }

    fn instr(&mut self, instr: &Instr, here: &Location, mut st: State) -> State {
        match instr {
            Instr::Assign(x, e) => {
                let old = st.rename(x, &mut self.fresh);
                st.f = Expr::and([st.f, Expr::eq(Expr::Var(x.clone()), e.subst1(&x.name, &old))]);
                st
            }
            Instr::Havoc(x) => {
                st.rename(x, &mut self.fresh);
                st
            }
            Instr::Assume(g) => {
                st.f = Expr::and([st.f, g.clone()]);
                st
            }
            Instr::Assert(g) => {
                self.emit(format!("a:{here}"), VcKind::Assertion, &st, g.clone(), here.clone());
                st
            }
            Instr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut s1 = st.clone();
                s1.f = Expr::and([s1.f, cond.clone()]);
                let mut s2 = st;
                s2.f = Expr::and([s2.f, Expr::not(cond.clone())]);
                let s1 = self.block(then_branch, &here.child(1), s1);
                let s2 = self.block(else_branch, &here.child(2), s2);
                self.join(s1, s2)
            }
            Instr::While {
                cond,
                body,
                invariant,
            } => {
                self.emit(
                    format!("init:{here}"),
                    VcKind::LoopPrecondition,
                    &st,
                    invariant.clone(),
                    here.clone(),
                );
                let head = State::loop_head(here, Expr::and([invariant.clone(), cond.clone()]));
                let mut end = self.block(body, &here.child(1), head);
                end.deps.insert(here.clone());
                let mut goals = invariant.conjuncts();
                if goals.is_empty() {
                    goals.push(Expr::tt());
                }
                for (k, goal) in goals.into_iter().enumerate() {
                    self.emit(
                        format!("ind:{here}#{k}"),
                        VcKind::Propagation,
                        &end,
                        goal,
                        here.clone(),
                    );
                }
                State::loop_head(here, Expr::and([invariant.clone(), Expr::not(cond.clone())]))
            }
        }
    }

    /// Merges the two sides of a conditional into one disjunctive state.
    fn join(&mut self, mut s1: State, mut s2: State) -> State {
        let mut taps = BTreeMap::new();
        let locs: BTreeSet<Location> = s1.taps.keys().chain(s2.taps.keys()).cloned().collect();
        let needs_guard = locs.iter().any(|l| {
            !matches!((s1.taps.get(l), s2.taps.get(l)),
                (Some(a), Some(b)) if a.guard.is_true() && b.guard.is_true())
        });
        let branch = needs_guard.then(|| Expr::Var(self.fresh.var(&Var::new("br", Sort::Bool))));
        if let Some(g) = &branch {
            s1.f = Expr::and([s1.f, g.clone()]);
            s2.f = Expr::and([s2.f, Expr::not(g.clone())]);
        }
        for l in locs {
            let tap = match (s1.taps.remove(&l), s2.taps.remove(&l)) {
                (Some(a), Some(b)) => {
                    let mut subst = Subst::new();
                    let names: BTreeSet<String> =
                        a.subst.keys().chain(b.subst.keys()).cloned().collect();
                    for name in names {
                        let va = a.subst.get(&name).cloned();
                        let vb = b.subst.get(&name).cloned();
                        let sort = va.as_ref().or(vb.as_ref()).map(Expr::sort).unwrap_or(Sort::Int);
                        let var = Var::new(name.clone(), sort);
                        let va = va.unwrap_or_else(|| Expr::Var(var.clone()));
                        let vb = vb.unwrap_or_else(|| Expr::Var(var.clone()));
                        if va == vb {
                            subst.insert(name, va);
                        } else {
                            let z = Expr::Var(self.fresh.var(&var));
                            s1.f = Expr::and([s1.f, Expr::eq(z.clone(), va)]);
                            s2.f = Expr::and([s2.f, Expr::eq(z.clone(), vb)]);
                            subst.insert(name, z);
                        }
                    }
                    let guard = match &branch {
                        Some(g) => Expr::or([
                            Expr::and([g.clone(), a.guard]),
                            Expr::and([Expr::not(g.clone()), b.guard]),
                        ]),
                        None => Expr::tt(),
                    };
                    Tap { guard, subst }
                }
                (Some(a), None) => Tap {
                    guard: Expr::and([branch.clone().expect("guard"), a.guard]),
                    subst: a.subst,
                },
                (None, Some(b)) => Tap {
                    guard: Expr::and([Expr::not(branch.clone().expect("guard")), b.guard]),
                    subst: b.subst,
                },
                (None, None) => unreachable!(),
            };
            taps.insert(l, tap);
        }
        State {
            f: Expr::or([s1.f, s2.f]),
            deps: s1.deps.union(&s2.deps).cloned().collect(),
            taps,
        }
    }
}

/// All verification conditions of a program, with deterministic ids.
pub fn vcgen(p: &Program) -> VcSet {
    let mut out = VcSet::default();
    let mut g = Gen {
        axiom: p.axiom(),
        fresh: FreshNames::for_program(p),
        out: &mut out,
    };
    g.block(&p.body, &Location::root(), State::start());
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid(Option<Model>),
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::Invalid(_) => "invalid",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

/// Checks validity by refuting `antecedent ∧ ¬consequent`.
pub fn check_vc(v: &Vc, sess: &mut SolverSession) -> SolverResult<Verdict> {
    check_vc_with(v, sess, true)
}

/// [`check_vc`], optionally without asking for a counterexample.
pub fn check_vc_with(v: &Vc, sess: &mut SolverSession, want_model: bool) -> SolverResult<Verdict> {
    let q = [v.antecedent.clone(), Expr::not(v.consequent.clone())];
    Ok(match sess.check_sat(&q, want_model)? {
        SatResult::Unsat => Verdict::Valid,
        SatResult::Sat(m) => Verdict::Invalid(m),
        SatResult::Unknown(r) => Verdict::Unknown(r),
    })
}
