//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed, and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use invforge::abduce::{gpid, AbduceError, AbduciblePool, Hypothesis, SearchBudget};
use invforge::ilinva::check_all;
use invforge::lang::{equiv_mod_invariants, locations, loop_locations};
use invforge::solver::{SatResult, UnknownReason};
use invforge::vc::{sp, wp};
use invforge::{parse_formula, parse_program, DeepeningSchedule, Formula, Ilinva, Location, Outcome, Program, SolverConfig, SolverSession, Verdict};
use invforge_cli::{cmd_check, cmd_synth, load, ReportOutcome, SynthOptions};

type Check = Result<String, String>;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn solver() -> SolverConfig {
    SolverConfig::from_env().with_timeout_ms(1000)
}

fn session() -> SolverSession {
    SolverSession::new(solver()).expect("solver starts")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn staged(dir: &Path, name: &str) -> PathBuf {
    let to = dir.join(name);
    fs::copy(corpus().join(name), &to).expect("copy corpus file");
    to
}

fn counter_program() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("p1.imp");
    fs::write(
        &path,
        "var i: int; var n: int;\nassume n >= 0; i := 0; while (i < n) invariant true { i := i + 1; } assert i = n;\n",
    )
    .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let opts = SynthOptions {
        budget: Duration::from_secs(60),
        ..SynthOptions::default()
    };
    let r = cmd_synth(&path, &solver(), opts).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.outcome == ReportOutcome::Synthesized, format!("outcome {}", r.outcome))?;
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    let out = r.output.ok_or("no solved file")?;
    let again = cmd_check(&out, &solver()).map_err(|e| e.to_string())?;
    ensure(again.outcome == ReportOutcome::Verified, "solved program does not re-verify")?;
    Ok(format!(
        "synthesized {} in {} ms, re-verified",
        again.invariants.values().cloned().collect::<Vec<_>>().join("; "),
        took.as_millis()
    ))
}

struct Instance {
    pool: AbduciblePool,
    goal: Formula,
}

fn random_atom(rng: &mut ChaCha8Rng) -> String {
    let vars = ["x", "y", "z"];
    let ops = ["=", "!=", "<", "<=", ">", ">="];
    let v = vars.choose(rng).unwrap();
    let op = ops.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        let w = vars.iter().filter(|w| *w != v).collect::<Vec<_>>();
        format!("{v} {op} {}", w.choose(rng).unwrap())
    } else {
        format!("{v} {op} {}", rng.gen_range(-2..=2))
    }
}

fn instances() -> Vec<Instance> {
    let p = parse_program("var x: int; var y: int; var z: int;").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..20)
        .map(|_| {
            let (a, b) = (random_atom(&mut rng), random_atom(&mut rng));
            let goal = if rng.gen_bool(0.5) {
                format!("{a} || {b}")
            } else {
                format!("{a} && {b}")
            };
            let n = rng.gen_range(4..=8);
            let mut lits: Vec<String> = Vec::new();
            while lits.len() < n {
                let l = match rng.gen_range(0..4) {
                    0 => a.clone(),
                    1 => b.clone(),
                    _ => random_atom(&mut rng),
                };
                if !lits.contains(&l) {
                    lits.push(l);
                }
            }
            Instance {
                pool: AbduciblePool::from_literals(lits.iter().map(|l| parse_formula(l, &p.symbols).unwrap())),
                goal: parse_formula(&goal, &p.symbols).unwrap(),
            }
        })
        .collect()
}

fn search(inst: &Instance, size: usize, sess: &mut SolverSession) -> Result<Vec<Hypothesis>, String> {
    gpid(&inst.goal, Hypothesis::default(), &inst.pool, &SearchBudget::new(size, 1), sess)
        .collect::<Result<Vec<_>, AbduceError>>()
        .map_err(|e| e.to_string())
}

fn conj(set: &[usize], pool: &AbduciblePool) -> Vec<Formula> {
    set.iter().map(|&i| pool.get(i).literal.clone()).collect()
}

fn gpid_soundness() -> Check {
    let mut sess = session();
    let mut judge = session();
    let (mut yielded, mut bad) = (0, 0);
    for inst in instances() {
        for h in search(&inst, 3, &mut sess)? {
            yielded += 1;
            if !judge.entails(&h.instances(&inst.pool), &inst.goal).map_err(|e| e.to_string())?.is_yes() {
                bad += 1;
            }
        }
    }
    ensure(bad == 0, format!("{bad} of {yielded} hypotheses do not entail the goal"))?;
    ensure(yielded > 0, "no hypotheses at all")?;
    Ok(format!("20 instances, {yielded} hypotheses, 0 violations"))
}

fn gpid_completeness() -> Check {
    let mut sess = session();
    let mut judge = session();
    let (mut checked, mut missed) = (0, 0);
    for inst in instances() {
        let hs = search(&inst, 3, &mut sess)?;
        let n = inst.pool.len();
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if set.len() > 3 {
                continue;
            }
            let hyp = conj(&set, &inst.pool);
            if judge.check_sat(&hyp, false).map_err(|e| e.to_string())?.is_unsat() {
                continue;
            }
            if !judge.proves(&hyp, &inst.goal).map_err(|e| e.to_string())? {
                continue;
            }
            checked += 1;
            let mut covered = false;
            for h in &hs {
                if judge.proves(&hyp, &h.formula(&inst.pool)).map_err(|e| e.to_string())? {
                    covered = true;
                    break;
                }
            }
            if !covered {
                missed += 1;
            }
        }
    }
    ensure(missed == 0, format!("{missed} entailing subsets not covered"))?;
    Ok(format!("{checked} entailing consistent subsets, 0 counterexamples"))
}

fn random_term(rng: &mut ChaCha8Rng) -> String {
    let v = ["x", "y", "z"].choose(rng).unwrap().to_string();
    match rng.gen_range(0..4) {
        0 => v,
        1 => rng.gen_range(-3..=3).to_string(),
        2 => format!("{v} + {}", rng.gen_range(1..=3)),
        _ => format!("{v} - {}", ["x", "y", "z"].choose(rng).unwrap()),
    }
}

fn random_formula(rng: &mut ChaCha8Rng) -> String {
    let ops = ["=", "!=", "<", "<=", ">", ">="];
    let atom = |rng: &mut ChaCha8Rng| format!("{} {} {}", random_term(rng), ops.choose(rng).unwrap(), random_term(rng));
    match rng.gen_range(0..4) {
        0 => format!("{} && {}", atom(rng), atom(rng)),
        1 => format!("{} || {}", atom(rng), atom(rng)),
        _ => atom(rng),
    }
}

/// A loop-free program of at most `budget` instructions.
fn random_block(rng: &mut ChaCha8Rng, budget: &mut usize, nested: bool) -> String {
    let mut out = String::new();
    let len = rng.gen_range(1..=3);
    for _ in 0..len {
        if *budget == 0 {
            break;
        }
        *budget -= 1;
        let v = ["x", "y", "z"].choose(rng).unwrap();
        let s = match rng.gen_range(0..5) {
            0 | 1 => format!("{v} := {};", random_term(rng)),
            2 => format!("havoc {v};"),
            3 => format!("assume {};", random_formula(rng)),
            _ if !nested => {
                let c = random_formula(rng);
                let a = random_block(rng, budget, true);
                let b = random_block(rng, budget, true);
                format!("if ({c}) {{ {a} }} else {{ {b} }}")
            }
            _ => format!("{v} := {};", random_term(rng)),
        };
        out.push_str(&s);
        out.push(' ');
    }
    out
}

fn duality() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sess = session();
    let mut disagree = Vec::new();
    let mut agreed_valid = 0;
    for k in 0..50 {
        let mut budget = 6;
        let body = random_block(&mut rng, &mut budget, false);
        let p = parse_program(&format!("var x: int; var y: int; var z: int; {body}")).map_err(|e| format!("{e}: {body}"))?;
        let f = parse_formula(&random_formula(&mut rng), &p.symbols).unwrap();
        let g = parse_formula(&random_formula(&mut rng), &p.symbols).unwrap();
        let by_wp = sess.proves(std::slice::from_ref(&f), &wp(&g, &p)).map_err(|e| e.to_string())?;
        let by_sp = sess.proves(&[sp(&f, &p)], &g).map_err(|e| e.to_string())?;
        if by_wp != by_sp {
            disagree.push(k);
        }
        agreed_valid += usize::from(by_wp && by_sp);
    }
    let took = start.elapsed();
    ensure(disagree.is_empty(), format!("disagreements on programs {disagree:?}"))?;
    ensure(took < Duration::from_secs(120), format!("took {took:?}"))?;
    Ok(format!("50 programs, 0 disagreements ({agreed_valid} valid), {} ms", took.as_millis()))
}

fn corpus_soundness() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut names: Vec<String> = fs::read_dir(corpus())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".imp") && !n.ends_with(".solved.imp"))
        .collect();
    names.sort();
    ensure(names.len() >= 10, format!("only {} corpus programs", names.len()))?;
    let mut ok = Vec::new();
    for name in &names {
        let path = staged(dir.path(), name);
        let start = Instant::now();
        let r = cmd_synth(&path, &solver(), SynthOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        let took = start.elapsed();
        if r.outcome != ReportOutcome::Synthesized {
            continue;
        }
        let out = r.output.clone().ok_or(format!("{name}: no solved file"))?;
        let again = cmd_check(&out, &solver()).map_err(|e| e.to_string())?;
        ensure(again.outcome == ReportOutcome::Verified, format!("{name}: solved program does not re-verify"))?;
        let (p, q) = (load(&path).map_err(|e| e.to_string())?, load(&out).map_err(|e| e.to_string())?);
        ensure(equiv_mod_invariants(&p, &q), format!("{name}: solved program differs beyond invariants"))?;
        if took <= Duration::from_secs(120) {
            ok.push(name.trim_end_matches(".imp").to_string());
        }
    }
    ensure(ok.len() >= 8, format!("{} of {} synthesized: {}", ok.len(), names.len(), ok.join(" ")))?;
    Ok(format!("{} of {} synthesized and re-verified", ok.len(), names.len()))
}

fn disjunction_necessity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = staged(dir.path(), "two_phase.imp");
    let mut times = Vec::new();
    for (disjuncts, want) in [(1, false), (2, true)] {
        let start = Instant::now();
        let opts = SynthOptions {
            disjuncts,
            ..SynthOptions::default()
        };
        let r = cmd_synth(&path, &solver(), opts).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let won = r.outcome == ReportOutcome::Synthesized;
        ensure(won == want, format!("--disjuncts {disjuncts}: {}", r.outcome))?;
        ensure(took < Duration::from_secs(120), format!("--disjuncts {disjuncts} took {took:?}"))?;
        if !want {
            ensure(r.note.as_deref() != Some("wall-clock budget exhausted"), "failure came from the deadline")?;
        }
        times.push(took.as_millis());
    }
    Ok(format!("fails with 1 disjunct ({} ms), succeeds with 2 ({} ms)", times[0], times[1]))
}

fn unknown_policy() -> Check {
    let p = parse_program("var x: int; var y: int; var z: int; var i: int;").unwrap();
    let hard = parse_formula("x > 1 && y > 1 && z > 1 && x * x * x + y * y * y = z * z * z", &p.symbols).unwrap();
    let mut fast = SolverSession::new(SolverConfig::from_env().with_timeout_ms(1)).map_err(|e| e.to_string())?;
    let r = fast.check_sat(&[hard], false).map_err(|e| e.to_string())?;
    ensure(r == SatResult::Unknown(UnknownReason::Timeout), format!("check_sat gave {r:?}"))?;

    let goal = parse_formula("x * x * x + y * y * y != z * z * z || x <= 1", &p.symbols).unwrap();
    let lits = ["x = y", "y > 2", "x <= 1", "z > 3"];
    let pool = AbduciblePool::from_literals(lits.iter().map(|l| parse_formula(l, &p.symbols).unwrap()));
    let found: Vec<Hypothesis> = gpid(&goal, Hypothesis::default(), &pool, &SearchBudget::new(2, 1), &mut fast)
        .collect::<Result<_, _>>()
        .map_err(|e| format!("gpid aborted: {e}"))?;
    let shown: Vec<String> = found.iter().map(|h| h.formula(&pool).to_string()).collect();
    ensure(shown.iter().any(|s| s == "x <= 1"), format!("gpid found {shown:?}"))?;

    let prog = parse_program(
        "var x: int; var y: int; var z: int; var i: int;
         assume x > 1 && y > 1 && z > 1; i := 0;
         while (i < 3) invariant x > 1 && y > 1 && z > 1 { i := i + 1; }
         assert x * x * x + y * y * y != z * z * z;",
    )
    .unwrap();
    let out = Ilinva::new(DeepeningSchedule::default())
        .with_budget(Duration::from_secs(10))
        .run(&prog, &mut fast)
        .map_err(|e| e.to_string())?;
    let last = match &out.program {
        Some(q) => check_all(q, &mut fast).map_err(|e| e.to_string())?,
        None => out.verdicts.clone(),
    };
    let unknown = last.iter().any(|(_, v)| matches!(v, Verdict::Unknown(_)));
    ensure(unknown, format!("expected an unknown verdict under a 1 ms timeout: {:?} {last:?}", out.outcome))?;
    ensure(out.outcome != Outcome::Synthesized, "synthesized despite unknown verdicts")?;
    Ok(format!(
        "check_sat unknown(timeout), gpid kept going ({} found), ilinva {:?}",
        found.len(),
        out.outcome
    ))
}

fn locations_model() -> Check {
    let p: Program = parse_program(
        "var i: int; var h: int;
         i := 1; h := 1;
         while (i < 10) { i := i + 1; h := i; }
         assert h = i;",
    )
    .map_err(|e| e.to_string())?;
    let got: BTreeSet<Location> = locations(&p);
    let want: BTreeSet<Location> = ["0", "1", "2", "2.1.0", "2.1.1", "2.1.2", "3", "4"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    ensure(got == want, format!("locations {got:?}"))?;
    let lloc = loop_locations(&p);
    ensure(lloc == vec!["2".parse::<Location>().unwrap()], format!("loops {lloc:?}"))?;
    Ok("8 locations, loops {2}".into())
}

fn failure_honesty() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = staged(dir.path(), "stuck.imp");
    let opts = SynthOptions::default();
    let budget = opts.budget;
    let start = Instant::now();
    let r = cmd_synth(&path, &solver(), opts).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.outcome == ReportOutcome::Fail, format!("outcome {}", r.outcome))?;
    ensure(took < budget, format!("took {took:?}"))?;
    ensure(r.stats.candidates >= 1, "no candidate tried")?;
    ensure(r.stats.init_passed == 0, format!("{} candidates survived the entry check", r.stats.init_passed))?;
    Ok(format!(
        "fail after {} candidates, none past the entry check, {} ms",
        r.stats.candidates,
        took.as_millis()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("counter program synthesized and re-verified", counter_program),
        ("implicant search soundness", gpid_soundness),
        ("implicant search completeness", gpid_completeness),
        ("wp/sp duality", duality),
        ("corpus soundness", corpus_soundness),
        ("disjunction necessity", disjunction_necessity),
        ("unknown treated as satisfiable", unknown_policy),
        ("location model", locations_model),
        ("failure honesty", failure_honesty),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
