//! Driver behind the `invforge` binary: checking, synthesis and corpus runs.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use invforge::ilinva::{check_all, precondition_failures, FailReason, Stats};
use invforge::lang::invariants;
use invforge::{
    parse_program, render_program, DeepeningSchedule, Ilinva, Outcome, ParseError, Program,
    SolverConfig, SolverError, SolverSession, Verdict,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{}: {source}", source.span())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: initial invariants are not inductive: {}", failing.join(", "))]
    Precondition { path: PathBuf, failing: Vec<String> },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Precondition { .. } => 2,
            CliError::Solver(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportOutcome {
    Verified,
    Synthesized,
    Fail,
    Inconclusive,
}

impl ReportOutcome {
    pub fn exit_code(self) -> i32 {
        match self {
            ReportOutcome::Verified | ReportOutcome::Synthesized => 0,
            ReportOutcome::Fail | ReportOutcome::Inconclusive => 1,
        }
    }
}

impl fmt::Display for ReportOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportOutcome::Verified => "verified",
            ReportOutcome::Synthesized => "synthesized",
            ReportOutcome::Fail => "fail",
            ReportOutcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcVerdict {
    pub id: String,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub file: PathBuf,
    pub outcome: ReportOutcome,
    pub verdicts: Vec<VcVerdict>,
    /// Loop location to invariant text.
    pub invariants: BTreeMap<String, String>,
    pub stats: Stats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RunReport {
    pub fn verdict(&self, id: &str) -> Option<&str> {
        self.verdicts.iter().find(|v| v.id == id).map(|v| v.verdict.as_str())
    }

    pub fn all_valid(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict == "valid")
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.file.display(), self.outcome)?;
        for v in &self.verdicts {
            writeln!(f, "  {:<16} {}", v.id, v.verdict)?;
        }
        for (l, inv) in &self.invariants {
            writeln!(f, "  invariant @{l}: {inv}")?;
        }
        if let Some(out) = &self.output {
            writeln!(f, "  written to {}", out.display())?;
        }
        if let Some(note) = &self.note {
            writeln!(f, "  {note}")?;
        }
        write!(
            f,
            "  {} candidates, {} solver calls, {} ms",
            self.stats.candidates, self.stats.solver_calls, self.stats.elapsed_ms
        )
    }
}

pub fn load(path: &Path) -> Result<Program, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_program(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn verdict_rows(vs: &[(String, Verdict)]) -> Vec<VcVerdict> {
    vs.iter()
        .map(|(id, v)| VcVerdict {
            id: id.clone(),
            verdict: v.label().to_string(),
        })
        .collect()
}

fn invariant_texts(p: &Program) -> BTreeMap<String, String> {
    invariants(p)
        .into_iter()
        .map(|(l, f)| (l.to_string(), f.to_string()))
        .collect()
}

fn outcome_of(vs: &[(String, Verdict)]) -> ReportOutcome {
    if vs.iter().all(|(_, v)| v.is_valid()) {
        ReportOutcome::Verified
    } else if vs.iter().any(|(_, v)| matches!(v, Verdict::Invalid(_))) {
        ReportOutcome::Fail
    } else {
        ReportOutcome::Inconclusive
    }
}

/// Checks every condition of the program as annotated.
pub fn cmd_check(path: &Path, solver: &SolverConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let p = load(path)?;
    let mut sess = SolverSession::new(solver.clone())?;
    let vs = check_all(&p, &mut sess)?;
    Ok(RunReport {
        file: path.to_path_buf(),
        outcome: outcome_of(&vs),
        verdicts: verdict_rows(&vs),
        invariants: invariant_texts(&p),
        stats: Stats {
            vc_checks: vs.len() as u64,
            solver_calls: sess.queries(),
            elapsed_ms: start.elapsed().as_millis() as u64,
            ..Stats::default()
        },
        output: None,
        note: None,
    })
}

pub struct SynthOptions {
    pub disjuncts: usize,
    pub max_depth: usize,
    pub max_size: usize,
    pub budget: Duration,
    /// Write the solved program next to the input.
    pub write_output: bool,
    /// Receives one JSON object per candidate.
    pub trace: Option<Box<dyn Write>>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            disjuncts: 2,
            max_depth: 2,
            max_size: 2,
            budget: Duration::from_secs(120),
            write_output: true,
            trace: None,
        }
    }
}

/// `dir/name.imp` becomes `dir/name.solved.imp`.
pub fn solved_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    input.with_file_name(format!("{stem}.solved.imp"))
}

/// Synthesizes invariants and, on success, writes and re-checks the solved program.
pub fn cmd_synth(path: &Path, solver: &SolverConfig, mut opts: SynthOptions) -> Result<RunReport, CliError> {
    let p = load(path)?;
    let mut sess = SolverSession::new(solver.clone())?;
    let failing = precondition_failures(&p, &mut sess)?;
    if !failing.is_empty() {
        return Err(CliError::Precondition {
            path: path.to_path_buf(),
            failing: failing.into_iter().map(|(id, _)| id).collect(),
        });
    }
    let schedule = DeepeningSchedule::bounded(opts.disjuncts, opts.max_depth, opts.max_size);
    let mut driver = Ilinva::new(schedule).with_budget(opts.budget);
    if let Some(w) = opts.trace.as_mut() {
        driver = driver.with_trace(move |e| {
            if let Ok(line) = serde_json::to_string(e) {
                let _ = writeln!(w, "{line}");
            }
        });
    }
    let result = driver.run(&p, &mut sess)?;
    drop(driver);
    let mut report = RunReport {
        file: path.to_path_buf(),
        outcome: ReportOutcome::Fail,
        verdicts: verdict_rows(&result.verdicts),
        invariants: BTreeMap::new(),
        stats: result.stats.clone(),
        output: None,
        note: None,
    };
    match result.outcome {
        Outcome::Verified => report.outcome = ReportOutcome::Verified,
        Outcome::Inconclusive => report.outcome = ReportOutcome::Inconclusive,
        Outcome::Fail(FailReason::Deadline) => report.note = Some("wall-clock budget exhausted".into()),
        Outcome::Fail(FailReason::ScheduleExhausted) => report.note = Some("search space exhausted".into()),
        Outcome::Synthesized => report.outcome = ReportOutcome::Synthesized,
    }
    if let Some(q) = &result.program {
        report.invariants = invariant_texts(q);
    }
    if let (ReportOutcome::Synthesized, Some(q)) = (report.outcome, &result.program) {
        if opts.write_output {
            let out = solved_path(path);
            fs::write(&out, render_program(q)).map_err(|source| CliError::Io {
                path: out.clone(),
                source,
            })?;
            if cmd_check(&out, solver)?.outcome != ReportOutcome::Verified {
                report.outcome = ReportOutcome::Inconclusive;
                report.note = Some("solved program did not re-verify".into());
            }
            report.output = Some(out);
        } else {
            let reparsed = parse_program(&render_program(q)).map_err(|source| CliError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
            if outcome_of(&check_all(&reparsed, &mut sess)?) != ReportOutcome::Verified {
                report.outcome = ReportOutcome::Inconclusive;
                report.note = Some("solved program did not re-verify".into());
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub file: String,
    /// An outcome, or `error`.
    pub outcome: String,
    pub time_ms: u64,
    pub candidates: usize,
    pub abducibles: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Synthesizes every `.imp` file of `dir` (solved outputs excluded), in name order.
pub fn cmd_bench(dir: &Path, solver: &SolverConfig, opts: impl Fn() -> SynthOptions) -> Result<Vec<BenchRow>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.ends_with(".imp") && !name.ends_with(".solved.imp")
        })
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for f in files {
        let start = Instant::now();
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let row = match cmd_synth(&f, solver, opts()) {
            Ok(r) => BenchRow {
                file: name,
                outcome: r.outcome.to_string(),
                time_ms: r.stats.elapsed_ms,
                candidates: r.stats.candidates,
                abducibles: r.stats.abducibles,
                error: None,
            },
            Err(e @ CliError::Solver(_)) => return Err(e),
            Err(e) => BenchRow {
                file: name,
                outcome: "error".into(),
                time_ms: start.elapsed().as_millis() as u64,
                candidates: 0,
                abducibles: 0,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<28} {:<13} {:>9} {:>10} {:>10}\n",
        "file", "outcome", "time_ms", "candidates", "abducibles"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<28} {:<13} {:>9} {:>10} {:>10}\n",
            r.file, r.outcome, r.time_ms, r.candidates, r.abducibles
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!("    {e}\n"));
        }
    }
    out
}
