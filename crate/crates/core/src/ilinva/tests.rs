use super::*;
use crate::lang::{equiv_mod_invariants, set_invariant, Expr, Instr, LangError, Var};
use crate::loc;
use crate::parser::{parse_formula, parse_program, render_expr};
use crate::solver::SolverConfig;

const P1: &str = "var i: int; var n: int;
    assume n >= 0; i := 0; while (i < n) invariant true { i := i + 1; } assert i = n;";

const NESTED: &str = "var i: int; var j: int; var n: int; var m: int;
    assume n >= 0; assume m >= 0; i := 0;
    while (i < n) { j := 0; while (j < m) { j := j + 1; } i := i + 1; }
    assert i = n;";

const LISTS: &str = "var i: int; var h: int; var len: int;
    i := 1; h := 1; len := 1;
    while (*) { i := i + 1; h := i; len := len + 1; }
    assert h = len;";

fn session() -> SolverSession {
    SolverSession::new(SolverConfig::from_env()).unwrap()
}

fn with_inv(src: &str, l: Location, inv: &str) -> Program {
    let p = parse_program(src).unwrap();
    let f = parse_formula(inv, &p.symbols).unwrap();
    set_invariant(&p, &l, f).unwrap()
}

fn all_valid(p: &Program, s: &mut SolverSession) -> bool {
    check_all(p, s).unwrap().iter().all(|(_, v)| v.is_valid())
}

fn show(p: &Program) -> String {
    invariants(p)
        .iter()
        .map(|(l, f)| format!("{l}: {}", render_expr(f)))
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn paths_of_the_counter() {
    let p = parse_program(P1).unwrap();
    assert!(path_extract(&p, &loc!(1), &loc!(1)).unwrap().is_empty());
    let one = path_extract(&p, &loc!(1), &loc!(2)).unwrap();
    assert_eq!(one, vec![Instr::Assign(Var::int("i"), Expr::int(0))]);
    let upto = path_extract(&p, &loc!(0), &loc!(3)).unwrap();
    assert_eq!(upto.len(), 2);
    assert!(matches!(upto[0], Instr::Assume(_)));
    assert!(matches!(
        path_extract(&p, &loc!(3), &loc!(1)),
        Err(LangError::InvalidRange { .. })
    ));
    assert!(matches!(
        path_extract(&p, &loc!(0), &loc!(9)),
        Err(LangError::InvalidLocation(_))
    ));
}

#[test]
fn paths_into_and_out_of_bodies() {
    let p = parse_program(NESTED).unwrap();
    // Outer head to inner head: enter the body then run the assignment to j.
    let down = path_extract(&p, &loc!(3), &loc!(3, 1, 1)).unwrap();
    assert_eq!(down.len(), 2);
    assert!(matches!(&down[0], Instr::Assume(c) if render_expr(c) == "i < n"));
    // From inside the inner body to the end: finish the bodies, skip nothing else.
    let up = path_extract(&p, &loc!(3, 1, 1, 1, 0), &loc!(5)).unwrap();
    assert_eq!(up.len(), 3);
}

#[test]
fn backprop_examples() {
    let p = parse_program(P1).unwrap();
    let f = parse_formula("i <= n", &p.symbols).unwrap();
    assert_eq!(backprop(&f, &p, &loc!(2), &loc!(2)).unwrap(), f);
    assert_eq!(backprop(&f, &p, &loc!(2), &loc!(1)).unwrap().to_string(), "0 <= n");
    assert_eq!(
        backprop(&f, &p, &loc!(2), &loc!(0)).unwrap().to_string(),
        "n >= 0 ==> 0 <= n"
    );
}

#[test]
fn forwardprop_examples() {
    let p = parse_program(P1).unwrap();
    let f = parse_formula("i <= n", &p.symbols).unwrap();
    assert_eq!(forwardprop(&f, &p, &loc!(2), &loc!(2)).unwrap(), f);
    let g = forwardprop(&Expr::tt(), &p, &loc!(0), &loc!(2)).unwrap();
    assert_eq!(program_conjuncts(&g, &p).to_string(), "n >= 0 && i = 0");

    let q = parse_program(NESTED).unwrap();
    let xi = parse_formula("i <= n", &q.symbols).unwrap();
    let g = forwardprop(&xi, &q, &loc!(3), &loc!(3, 1, 1)).unwrap();
    assert_eq!(program_conjuncts(&g, &q).to_string(), "i <= n && i < n && j = 0");
}

#[test]
fn strengthen_examples() {
    let p = parse_program(P1).unwrap();
    let a = parse_formula("i <= n", &p.symbols).unwrap();
    let b = parse_formula("i >= 0", &p.symbols).unwrap();
    let q = strengthen(&p, &loc!(2), a.clone()).unwrap();
    assert_eq!(invariants(&q)[&loc!(2)], a);
    let r = strengthen(&q, &loc!(2), b).unwrap();
    assert_eq!(invariants(&r)[&loc!(2)].to_string(), "i <= n && i >= 0");
    assert!(equiv_mod_invariants(&p, &r));
    assert_eq!(strengthen(&q, &loc!(2), a).unwrap(), q);
    assert!(matches!(strengthen(&p, &loc!(1), Expr::tt()), Err(LangError::NotALoop(_))));
}

#[test]
fn ind_keeps_inductive_invariants() {
    let p = with_inv(P1, loc!(2), "i <= n");
    let mut s = session();
    let out = ind(&p, &loc!(2), &SearchBudget::new(1, 1), &mut s).unwrap();
    assert_eq!(out, Some(p));
}

#[test]
fn ind_repairs_the_list_candidate() {
    let p = with_inv(LISTS, loc!(4), "h = len");
    let mut s = session();
    assert!(vcgen(&p).init.values().all(|v| check_vc(v, &mut s).unwrap().is_valid()));
    let q = ind(&p, &loc!(4), &SearchBudget::new(1, 1), &mut s).unwrap().expect("repaired");
    let inv = invariants(&q)[&loc!(4)].clone();
    assert_eq!(inv.conjuncts().len(), 2, "{}", show(&q));
    assert!(s.entails(std::slice::from_ref(&inv), &parse_formula("h = len", &q.symbols).unwrap()).unwrap().is_yes());
    assert!(s.entails(&[inv], &parse_formula("h = i", &q.symbols).unwrap()).unwrap().is_yes());
    assert!(all_valid(&q, &mut s));
}

#[test]
fn ind_fails_on_a_hopeless_invariant() {
    let p = with_inv(P1, loc!(2), "i = 0");
    let mut s = session();
    assert_eq!(ind(&p, &loc!(2), &SearchBudget::new(1, 1), &mut s).unwrap(), None);
}

fn synth(src: &str) -> (Program, Synthesis) {
    let p = parse_program(src).unwrap();
    let mut s = session();
    let out = Ilinva::new(DeepeningSchedule::default())
        .with_budget(Duration::from_secs(60))
        .run(&p, &mut s)
        .unwrap();
    if let Some(q) = &out.program {
        assert!(equiv_mod_invariants(&p, q));
        if out.outcome == Outcome::Synthesized {
            assert!(all_valid(q, &mut s), "{}", show(q));
        }
    }
    (p, out)
}

#[test]
fn counter_is_synthesized() {
    let (_, out) = synth(P1);
    assert_eq!(out.outcome, Outcome::Synthesized);
    assert!(out.stats.candidates >= 1);
}

#[test]
fn nested_loops_are_synthesized() {
    let (_, out) = synth(NESTED);
    assert_eq!(out.outcome, Outcome::Synthesized, "{:?}", out.stats);
}

#[test]
fn list_analogue_is_synthesized() {
    let (_, out) = synth(LISTS);
    assert_eq!(out.outcome, Outcome::Synthesized, "{:?}", out.stats);
    let q = out.program.unwrap();
    assert_eq!(invariants(&q)[&loc!(4)].conjuncts().len(), 2, "{}", show(&q));
}

#[test]
fn no_loop_means_failure() {
    let (_, out) = synth("var x: int; assume x = 0; assert x = 1;");
    assert_eq!(out.outcome, Outcome::Fail(FailReason::ScheduleExhausted));
    assert_eq!(out.stats.candidates, 0);
}

#[test]
fn verified_input_is_returned_unchanged() {
    let p = with_inv(P1, loc!(2), "i <= n");
    let mut s = session();
    let out = ilinva(&p, &DeepeningSchedule::default(), &mut s).unwrap();
    assert_eq!(out.outcome, Outcome::Verified);
    assert_eq!(out.program, Some(p));
    assert_eq!(out.stats.candidates, 0);
}

#[test]
fn hopeless_assertion_fails_at_the_entry_filter() {
    let (_, out) = synth("var x: int; var i: int; assume x = 0; while (*) { i := i + 1; } assert x = 1;");
    assert_eq!(out.outcome, Outcome::Fail(FailReason::ScheduleExhausted));
    assert!(out.stats.candidates >= 1);
    assert_eq!(out.stats.init_passed, 0);
}

#[test]
fn trail_strictly_strengthens() {
    let (p, out) = synth(LISTS);
    let mut s = session();
    let mut cur = p.clone();
    for (l, xi) in &out.trail {
        let next = strengthen(&cur, l, program_conjuncts(xi, &cur)).unwrap();
        let old = invariants(&cur)[l].clone();
        let new = invariants(&next)[l].clone();
        assert!(s.entails(std::slice::from_ref(&new), &old).unwrap().is_yes());
        assert!(!s.entails(&[old], &new).unwrap().is_yes());
        cur = next;
    }
    assert_eq!(Some(cur), out.program);
    assert_eq!(replay(&p, &out.trail).unwrap(), out.program.unwrap());
}

#[test]
fn runs_are_deterministic() {
    let (_, a) = synth(NESTED);
    let (_, b) = synth(NESTED);
    assert_eq!(a.stats.vc_checks, b.stats.vc_checks);
    assert_eq!(a.stats.candidates, b.stats.candidates);
    assert_eq!(a.program, b.program);
}

#[test]
fn trace_reports_each_candidate() {
    let p = parse_program(P1).unwrap();
    let mut s = session();
    let mut events = Vec::new();
    let out = Ilinva::new(DeepeningSchedule::default())
        .with_trace(|e| events.push(e.clone()))
        .run(&p, &mut s)
        .unwrap();
    assert_eq!(events.len(), out.stats.candidates);
    assert!(events.iter().any(|e| e.verdict == "accepted"));
    assert!(events.windows(2).all(|w| w[0].solver_calls <= w[1].solver_calls));
}

#[test]
fn schedules() {
    let s = DeepeningSchedule::standard(1);
    assert!(s.is_increasing());
    assert_eq!(s.levels.len(), 3);
    assert!(s.levels.iter().all(|b| b.disjuncts == 1 && b.node_limit == 5000));
    assert_eq!(DeepeningSchedule::bounded(2, 1, 2).levels.len(), 2);
    let flat = DeepeningSchedule {
        levels: vec![SearchBudget::new(1, 1), SearchBudget::new(1, 1)],
    };
    assert!(!flat.is_increasing());
}

#[test]
fn strengthening_chains_are_bounded() {
    let p = parse_program(LISTS).unwrap();
    let mut s = session();
    let mut schedule = DeepeningSchedule::standard(2);
    for b in &mut schedule.levels {
        b.max_strengthenings = 1;
    }
    let out = ilinva(&p, &schedule, &mut s).unwrap();
    assert_eq!(out.outcome, Outcome::Fail(FailReason::ScheduleExhausted));
    assert!(out.stats.init_passed >= 1);
}
