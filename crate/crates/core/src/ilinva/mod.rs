//! Invariant synthesis: strengthen loop invariants with abduced hypotheses until
//! every verification condition of the program is valid.

mod path;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::abduce::{abduce_in, SearchBudget, Universe};
use crate::lang::{invariants, loop_locations, Formula, Location, Program};
use crate::solver::{SolverError, SolverSession};
use crate::vc::{check_vc, check_vc_with, vcgen, Vc, Verdict};

pub use path::{backprop, forwardprop, path_extract, program_conjuncts, rm_loops, strengthen};

/// Budget levels tried in turn, each one larger than the previous in some dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeepeningSchedule {
    pub levels: Vec<SearchBudget>,
}

impl DeepeningSchedule {
    /// (depth 1, size 1), (depth 1, size 2), (depth 2, size 2).
    pub fn standard(disjuncts: usize) -> Self {
        let level = |max_depth, max_size| SearchBudget {
            max_size,
            max_depth,
            disjuncts,
            ..SearchBudget::default()
        };
        DeepeningSchedule {
            levels: vec![level(1, 1), level(1, 2), level(2, 2)],
        }
    }

    /// Levels up to the given depth and size bounds.
    pub fn bounded(disjuncts: usize, max_depth: usize, max_size: usize) -> Self {
        let mut s = Self::standard(disjuncts);
        s.levels
            .retain(|b| b.max_depth <= max_depth && b.max_size <= max_size);
        if s.levels.is_empty() {
            s.levels.push(SearchBudget {
                max_size,
                max_depth,
                disjuncts,
                ..SearchBudget::default()
            });
        }
        s
    }

    /// Every level exceeds its predecessor in at least one dimension and shrinks in none.
    pub fn is_increasing(&self) -> bool {
        self.levels.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dims = [
                (a.max_depth, b.max_depth),
                (a.max_size, b.max_size),
                (a.node_limit, b.node_limit),
                (a.max_strengthenings, b.max_strengthenings),
            ];
            dims.iter().all(|(x, y)| x <= y) && dims.iter().any(|(x, y)| x < y)
        })
    }
}

impl Default for DeepeningSchedule {
    fn default() -> Self {
        Self::standard(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ilinva,
    Ind,
}

/// One strengthening attempt, as reported to a trace callback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub stage: Stage,
    pub level: usize,
    #[serde(rename = "loop")]
    pub loop_loc: String,
    pub formula: String,
    pub verdict: String,
    pub solver_calls: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    /// Distinct strengthenings attempted.
    pub candidates: usize,
    /// Candidates rejected because the invariant no longer held on loop entry.
    pub init_rejected: usize,
    /// Candidates that passed the entry check.
    pub init_passed: usize,
    pub abductions: usize,
    /// Largest abducible pool seen.
    pub abducibles: usize,
    /// Verification-condition checks made by the orchestrator.
    pub vc_checks: u64,
    /// Solver calls outside implicant search.
    pub solver_calls: u64,
    /// Solver calls made while abducing.
    pub abduction_calls: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailReason {
    ScheduleExhausted,
    Deadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// The input already verifies.
    Verified,
    Synthesized,
    Fail(FailReason),
    /// A program was found but some final check came back unknown.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub outcome: Outcome,
    /// The resulting program for `Verified`, `Synthesized` and `Inconclusive`.
    pub program: Option<Program>,
    /// Final verdicts of every condition of `program` (or of the input on failure).
    pub verdicts: Vec<(String, Verdict)>,
    /// Index of the schedule level that produced `program`.
    pub level: Option<usize>,
    pub stats: Stats,
    /// Strengthenings applied to the input, in order.
    pub trail: Vec<(Location, Formula)>,
}

/// Checks every condition, in the order of [`crate::vc::VcSet::all`].
pub fn check_all(p: &Program, sess: &mut SolverSession) -> Result<Vec<(String, Verdict)>, SolverError> {
    vcgen(p)
        .all()
        .map(|v| Ok((v.id.clone(), check_vc(v, sess)?)))
        .collect()
}

/// Propagation and entry conditions that are not valid. Synthesis assumes there are none.
pub fn precondition_failures(p: &Program, sess: &mut SolverSession) -> Result<Vec<(String, Verdict)>, SolverError> {
    let vcs = vcgen(p);
    let mut out = Vec::new();
    for v in vcs.propagation.values().flatten().chain(vcs.init.values()) {
        let verdict = check_vc(v, sess)?;
        if !verdict.is_valid() {
            out.push((v.id.clone(), verdict));
        }
    }
    Ok(out)
}

enum Halt {
    Deadline,
    Solver(SolverError),
}

impl From<SolverError> for Halt {
    fn from(e: SolverError) -> Self {
        Halt::Solver(e)
    }
}

type Step<T> = Result<T, Halt>;

type TraceFn<'t> = Box<dyn FnMut(&TraceEvent) + 't>;

/// The synthesis driver.
pub struct Ilinva<'t> {
    schedule: DeepeningSchedule,
    budget: Option<Duration>,
    trace: Option<TraceFn<'t>>,
}

impl<'t> Ilinva<'t> {
    pub fn new(schedule: DeepeningSchedule) -> Self {
        Ilinva {
            schedule,
            budget: None,
            trace: None,
        }
    }

    /// Wall-clock bound for the whole run.
    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_trace(mut self, f: impl FnMut(&TraceEvent) + 't) -> Self {
        self.trace = Some(Box::new(f));
        self
    }

    pub fn run(&mut self, p: &Program, sess: &mut SolverSession) -> Result<Synthesis, SolverError> {
        let start = Instant::now();
        let deadline = self.budget.map(|b| start + b);
        let base = sess.queries();
        let mut stats = Stats::default();
        let verdicts = check_all(p, sess)?;
        stats.vc_checks += verdicts.len() as u64;
        let finish = |mut stats: Stats, sess: &SolverSession| {
            stats.elapsed_ms = start.elapsed().as_millis() as u64;
            stats.solver_calls = sess.queries() - base - stats.abduction_calls;
            stats
        };
        if verdicts.iter().all(|(_, v)| v.is_valid()) {
            return Ok(Synthesis {
                outcome: Outcome::Verified,
                program: Some(p.clone()),
                verdicts,
                level: None,
                stats: finish(stats, sess),
                trail: Vec::new(),
            });
        }
        let mut reason = FailReason::ScheduleExhausted;
        let mut pending: Option<Synthesis> = None;
        for (level, budget) in self.schedule.levels.iter().enumerate() {
            let mut search = Search {
                universe: Universe::new(p, budget.max_depth),
                budget: budget.clone(),
                level,
                tried: HashSet::new(),
                trail: Vec::new(),
                deadline,
                base,
                stats: &mut stats,
                sess,
                trace: self.trace.as_mut(),
            };
            match search.assertions(p.clone()) {
                Ok(Some(q)) => {
                    let trail = search.trail.clone();
                    let verdicts = check_all(&q, sess)?;
                    stats.vc_checks += verdicts.len() as u64;
                    let invalid = verdicts.iter().any(|(_, v)| matches!(v, Verdict::Invalid(_)));
                    if verdicts.iter().all(|(_, v)| v.is_valid()) {
                        return Ok(Synthesis {
                            outcome: Outcome::Synthesized,
                            program: Some(q),
                            verdicts,
                            level: Some(level),
                            stats: finish(stats, sess),
                            trail,
                        });
                    }
                    if !invalid && pending.is_none() {
                        pending = Some(Synthesis {
                            outcome: Outcome::Inconclusive,
                            program: Some(q),
                            verdicts,
                            level: Some(level),
                            stats: Stats::default(),
                            trail,
                        });
                    }
                }
                Ok(None) => {}
                Err(Halt::Deadline) => {
                    reason = FailReason::Deadline;
                    break;
                }
                Err(Halt::Solver(e)) => return Err(e),
            }
        }
        if let Some(mut s) = pending {
            s.stats = finish(stats, sess);
            return Ok(s);
        }
        Ok(Synthesis {
            outcome: Outcome::Fail(reason),
            program: None,
            verdicts,
            level: None,
            stats: finish(stats, sess),
            trail: Vec::new(),
        })
    }
}

/// Runs the standard driver without a wall-clock bound.
pub fn ilinva(p: &Program, schedule: &DeepeningSchedule, sess: &mut SolverSession) -> Result<Synthesis, SolverError> {
    Ilinva::new(schedule.clone()).run(p, sess)
}

/// Makes every propagation condition of the loops at or below `l` valid by
/// strengthening them, or returns `None`.
pub fn ind(p: &Program, l: &Location, budget: &SearchBudget, sess: &mut SolverSession) -> Result<Option<Program>, SolverError> {
    let mut stats = Stats::default();
    let base = sess.queries();
    let mut search = Search {
        universe: Universe::new(p, budget.max_depth),
        budget: budget.clone(),
        level: 0,
        tried: HashSet::new(),
        trail: Vec::new(),
        deadline: None,
        base,
        stats: &mut stats,
        sess,
        trace: None,
    };
    match search.ind(p.clone(), l) {
        Ok(r) => Ok(r),
        Err(Halt::Solver(e)) => Err(e),
        Err(Halt::Deadline) => Ok(None),
    }
}

/// Normalized invariants of a program, used to never revisit a state.
fn state_key(p: &Program) -> Vec<(Location, Vec<String>)> {
    invariants(p)
        .into_iter()
        .map(|(l, f)| {
            let mut parts: Vec<String> = f.conjuncts().iter().map(|c| c.to_string()).collect();
            parts.sort();
            parts.dedup();
            (l, parts)
        })
        .collect()
}

struct Search<'a, 't> {
    universe: Universe,
    budget: SearchBudget,
    level: usize,
    tried: HashSet<Vec<(Location, Vec<String>)>>,
    trail: Vec<(Location, Formula)>,
    deadline: Option<Instant>,
    base: u64,
    stats: &'a mut Stats,
    sess: &'a mut SolverSession,
    trace: Option<&'a mut TraceFn<'t>>,
}

impl Search<'_, '_> {
    fn tick(&self) -> Step<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Halt::Deadline),
            _ => Ok(()),
        }
    }

    fn check(&mut self, v: &Vc) -> Step<Verdict> {
        self.stats.vc_checks += 1;
        Ok(check_vc_with(v, self.sess, false)?)
    }

    fn abduce(&mut self, goal: &Vc, p: &Program, l: &Location) -> Step<Vec<Formula>> {
        self.tick()?;
        let before = self.sess.queries();
        let out = abduce_in(&self.universe, goal, p, l, &self.budget, self.sess);
        self.stats.abduction_calls += self.sess.queries() - before;
        let out = out?;
        self.stats.abductions += 1;
        self.stats.abducibles = self.stats.abducibles.max(out.pool_size);
        log::debug!(
            "abduced {} candidates for {} at {l} (pool {}, {} implicants)",
            out.candidates.len(),
            goal.id,
            out.pool_size,
            out.implicants
        );
        Ok(out.candidates)
    }

    fn emit(&mut self, stage: Stage, l: &Location, xi: &Formula, verdict: &str) {
        if let Some(f) = self.trace.as_mut() {
            f(&TraceEvent {
                stage,
                level: self.level,
                loop_loc: l.to_string(),
                formula: xi.to_string(),
                verdict: verdict.to_string(),
                solver_calls: self.sess.queries() - self.base - self.stats.abduction_calls,
            });
        }
    }

    /// Strengthens loop `l` of `p` with `xi`; returns the new program when it is a
    /// genuinely new, strictly stronger state whose loop still holds on entry.
    fn candidate(&mut self, stage: Stage, p: &Program, l: &Location, xi: &Formula) -> Step<Option<Program>> {
        self.tick()?;
        let xi = program_conjuncts(xi, p);
        if xi.is_true() || self.trail.len() >= self.budget.max_strengthenings {
            return Ok(None);
        }
        let q = strengthen(p, l, xi.clone()).expect("strengthening a loop location");
        if !self.tried.insert(state_key(&q)) {
            return Ok(None);
        }
        self.stats.candidates += 1;
        let old = invariants(p).remove(l).unwrap_or_else(Formula::tt);
        let new = invariants(&q).remove(l).unwrap_or_else(Formula::tt);
        if self.sess.proves(&[p.axiom(), old], &new)? {
            self.emit(stage, l, &xi, "not-stronger");
            return Ok(None);
        }
        let vcs = vcgen(&q);
        let verdict = match vcs.init.get(l) {
            Some(v) => self.check(v)?,
            None => Verdict::Valid,
        };
        if !verdict.is_valid() {
            self.stats.init_rejected += 1;
            self.emit(stage, l, &xi, &format!("init-{}", verdict.label()));
            return Ok(None);
        }
        self.stats.init_passed += 1;
        log::debug!("accepted at depth {}: {xi} @{l}", self.trail.len() + 1);
        self.emit(stage, l, &xi, "accepted");
        Ok(Some(q))
    }

    /// The first assertion condition that does not check valid.
    fn failing_assertion(&mut self, p: &Program) -> Step<Option<Vc>> {
        let mut vcs = vcgen(p).assertions;
        vcs.sort_by(|a, b| a.origin.cmp(&b.origin));
        for v in vcs {
            if !self.check(&v)?.is_valid() {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    fn assertions(&mut self, p: Program) -> Step<Option<Program>> {
        let Some(goal) = self.failing_assertion(&p)? else {
            return Ok(Some(p));
        };
        let Some(l) = goal.closest_dependency().cloned() else {
            log::debug!("{} depends on no loop", goal.id);
            return Ok(None);
        };
        let mut targets: Vec<Location> = loop_locations(&p).into_iter().filter(|t| *t <= l).collect();
        targets.reverse();
        for xi in self.abduce(&goal, &p, &l)? {
            for t in &targets {
                let Ok(xi_t) = backprop(&xi, &p, &l, t) else {
                    continue;
                };
                let Some(q) = self.candidate(Stage::Ilinva, &p, t, &xi_t)? else {
                    continue;
                };
                self.trail.push((t.clone(), xi_t));
                if let Some(q) = self.ind(q, t)? {
                    if let Some(r) = self.assertions(q)? {
                        return Ok(Some(r));
                    }
                }
                self.trail.pop();
            }
        }
        Ok(None)
    }

    /// The first propagation condition of a loop at or below `l` that does not check valid.
    fn failing_propagation(&mut self, p: &Program, l: &Location) -> Step<Option<Vc>> {
        let vcs = vcgen(p);
        for (at, group) in &vcs.propagation {
            if !l.is_prefix_of(at) {
                continue;
            }
            for v in group {
                if !self.check(v)?.is_valid() {
                    return Ok(Some(v.clone()));
                }
            }
        }
        Ok(None)
    }

    fn ind(&mut self, p: Program, l: &Location) -> Step<Option<Program>> {
        let Some(goal) = self.failing_propagation(&p, l)? else {
            return Ok(Some(p));
        };
        let l0 = goal.closest_dependency().cloned().unwrap_or_else(|| goal.origin.clone());
        let loops = loop_locations(&p);
        let mut targets: Vec<Location> = loops.iter().filter(|t| l0.is_prefix_of(t)).cloned().collect();
        let mut above: Vec<Location> = loops
            .iter()
            .filter(|t| l.is_prefix_of(t) && **t < l0 && !l0.is_prefix_of(t))
            .cloned()
            .collect();
        above.reverse();
        targets.extend(above);
        for xi in self.abduce(&goal, &p, &l0)? {
            for t in &targets {
                let moved = if l0 <= *t {
                    forwardprop(&xi, &p, &l0, t)
                } else {
                    backprop(&xi, &p, &l0, t)
                };
                let Ok(xi_t) = moved else {
                    continue;
                };
                let Some(q) = self.candidate(Stage::Ind, &p, t, &xi_t)? else {
                    continue;
                };
                self.trail.push((t.clone(), xi_t));
                if let Some(r) = self.ind(q, l)? {
                    return Ok(Some(r));
                }
                self.trail.pop();
            }
        }
        Ok(None)
    }
}

/// Replays a trail of strengthenings on `p`.
pub fn replay(p: &Program, trail: &[(Location, Formula)]) -> Result<Program, crate::lang::LangError> {
    trail
        .iter()
        .try_fold(p.clone(), |q, (l, xi)| strengthen(&q, l, program_conjuncts(xi, &q)))
}

#[cfg(test)]
mod tests;
