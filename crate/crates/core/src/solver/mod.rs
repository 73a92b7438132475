//! External SMT solver sessions over SMT-LIB text on pipes.
//!
//! Each query runs inside its own `push`/`pop` scope. A query that outlives
//! the configured timeout (plus a grace period) is answered `unknown` and the
//! subprocess is replaced, so callers always get a usable session back.

pub mod smt;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Expr, Formula, Sort};
use smt::{encode, parse_sexp, sort_name, symbol, Framer, Sexp};

/// Environment variable naming the solver executable (optionally followed by arguments).
pub const SOLVER_ENV: &str = "INVFORGE_SOLVER";

const GRACE: Duration = Duration::from_millis(2000);
const COMMAND_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub program: String,
    pub args: Vec<String>,
    /// Passed to `set-logic`; empty means no `set-logic` command.
    pub logic: String,
    pub timeout_ms: u64,
    pub produce_models: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            program: "z3".to_string(),
            args: vec!["-in".to_string()],
            logic: "QF_UFNIA".to_string(),
            timeout_ms: 1000,
            produce_models: true,
        }
    }
}

impl SolverConfig {
    /// Default configuration, with the executable taken from `INVFORGE_SOLVER` when set.
    pub fn from_env() -> Self {
        let mut cfg = SolverConfig::default();
        if let Ok(cmd) = std::env::var(SOLVER_ENV) {
            let mut words = cmd.split_whitespace().map(str::to_string);
            if let Some(program) = words.next() {
                let args: Vec<String> = words.collect();
                let is_z3 = std::path::Path::new(&program)
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with("z3"));
                cfg.args = if args.is_empty() && is_z3 {
                    vec!["-in".to_string()]
                } else {
                    args
                };
                cfg.program = program;
            }
        }
        cfg
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Self {
        self.timeout_ms = ms.max(1);
        self
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{program}`: {source}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("solver process exited: {0}")]
    Crashed(String),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver session is poisoned by an earlier failure")]
    Poisoned,
}

pub type SolverResult<T> = Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

/// Values of the symbols (and requested terms) of a satisfied query.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub vars: BTreeMap<String, Value>,
    /// Values of the extra terms passed to [`SolverSession::check_sat_eval`], in order.
    pub terms: Vec<Value>,
}

impl Model {
    pub fn get(&self, name: &str) -> Option<Value> {
        self.vars.get(name).copied()
    }

    /// Evaluates an expression without function applications under the model.
    pub fn eval(&self, e: &Expr) -> Option<Value> {
        use crate::lang::{ArithOp, CmpOp};
        let int = |e: &Expr| match self.eval(e)? {
            Value::Int(n) => Some(n),
            Value::Bool(_) => None,
        };
        let boolean = |e: &Expr| match self.eval(e)? {
            Value::Bool(b) => Some(b),
            Value::Int(_) => None,
        };
        Some(match e {
            Expr::BoolLit(b) => Value::Bool(*b),
            Expr::IntLit(n) => Value::Int(*n),
            Expr::Var(v) => self.get(&v.name)?,
            Expr::App(..) => return None,
            Expr::Not(a) => Value::Bool(!boolean(a)?),
            Expr::And(items) => {
                let mut acc = true;
                for i in items {
                    acc &= boolean(i)?;
                }
                Value::Bool(acc)
            }
            Expr::Or(items) => {
                let mut acc = false;
                for i in items {
                    acc |= boolean(i)?;
                }
                Value::Bool(acc)
            }
            Expr::Implies(a, b) => Value::Bool(!boolean(a)? || boolean(b)?),
            Expr::Cmp(op, a, b) => {
                let (x, y) = (self.eval(a)?, self.eval(b)?);
                let r = match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => {
                        let (Value::Int(x), Value::Int(y)) = (x, y) else {
                            return None;
                        };
                        match op {
                            CmpOp::Lt => x < y,
                            CmpOp::Le => x <= y,
                            CmpOp::Gt => x > y,
                            CmpOp::Ge => x >= y,
                            CmpOp::Eq | CmpOp::Ne => unreachable!(),
                        }
                    }
                };
                Value::Bool(r)
            }
            Expr::Arith(op, a, b) => {
                let (x, y) = (int(a)?, int(b)?);
                Value::Int(match op {
                    ArithOp::Add => x.checked_add(y)?,
                    ArithOp::Sub => x.checked_sub(y)?,
                    ArithOp::Mul => x.checked_mul(y)?,
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnknownReason {
    Timeout,
    /// The solver answered `unknown` for another reason (e.g. incompleteness).
    Incomplete(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SatResult {
    Sat(Option<Model>),
    Unsat,
    Unknown(UnknownReason),
}

impl SatResult {
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }

    /// Satisfiable, or possibly so: `unknown` counts as satisfiable.
    pub fn maybe_sat(&self) -> bool {
        !self.is_unsat()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entailment {
    Yes,
    No(Option<Model>),
    Unknown(UnknownReason),
}

impl Entailment {
    pub fn is_yes(&self) -> bool {
        matches!(self, Entailment::Yes)
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<String>,
}

impl Process {
    fn spawn(cfg: &SolverConfig) -> SolverResult<Process> {
        let mut child = Command::new(&cfg.program)
            .args(&cfg.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn {
                program: cfg.program.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            let mut framer = Framer::default();
            let mut line = String::new();
            loop {
                line.clear();
                match reader.read_line(&mut line) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        for reply in framer.feed(&line) {
                            if tx.send(reply).is_err() {
                                return;
                            }
                        }
                    }
                }
            }
        });
        Ok(Process {
            child,
            stdin,
            replies: rx,
        })
    }

    fn send(&mut self, cmd: &str) -> SolverResult<()> {
        log::trace!("smt> {cmd}");
        writeln!(self.stdin, "{cmd}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SolverError::Crashed(e.to_string()))
    }

    fn recv(&mut self, wait: Duration) -> Result<String, RecvTimeoutError> {
        let r = self.replies.recv_timeout(wait);
        if let Ok(reply) = &r {
            log::trace!("smt< {reply}");
        }
        r
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A live solver subprocess with its declarations and scope depth.
pub struct SolverSession {
    cfg: SolverConfig,
    proc: Option<Process>,
    declared: BTreeMap<String, (Vec<Sort>, Sort)>,
    depth: usize,
    incremental: bool,
    poisoned: bool,
    queries: u64,
    restarts: u64,
}

impl std::fmt::Debug for SolverSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverSession")
            .field("program", &self.cfg.program)
            .field("depth", &self.depth)
            .field("queries", &self.queries)
            .finish()
    }
}

impl SolverSession {
    pub fn new(cfg: SolverConfig) -> SolverResult<Self> {
        let mut s = SolverSession {
            cfg,
            proc: None,
            declared: BTreeMap::new(),
            depth: 0,
            incremental: true,
            poisoned: false,
            queries: 0,
            restarts: 0,
        };
        s.start()?;
        s.incremental = s.probe_push_pop()?;
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Current assertion-stack depth; zero between queries.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of satisfiability checks issued so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Number of times the subprocess was replaced.
    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    pub fn is_incremental(&self) -> bool {
        self.incremental
    }

    pub fn set_timeout_ms(&mut self, ms: u64) -> SolverResult<()> {
        self.cfg.timeout_ms = ms.max(1);
        self.command(&format!("(set-option :timeout {})", self.cfg.timeout_ms))
    }

    fn start(&mut self) -> SolverResult<()> {
        self.proc = Some(Process::spawn(&self.cfg)?);
        self.declared.clear();
        self.depth = 0;
        self.command("(set-option :print-success true)")?;
        if self.cfg.produce_models {
            self.command("(set-option :produce-models true)")?;
        }
        if !self.cfg.logic.is_empty() {
            self.command(&format!("(set-logic {})", self.cfg.logic))?;
        }
        self.command(&format!("(set-option :timeout {})", self.cfg.timeout_ms))?;
        Ok(())
    }

    /// Replaces the subprocess and clears the poisoned state.
    pub fn restart(&mut self) -> SolverResult<()> {
        self.proc = None;
        self.poisoned = false;
        self.restarts += 1;
        self.start().inspect_err(|_| self.poisoned = true)
    }

    fn probe_push_pop(&mut self) -> SolverResult<bool> {
        let ok = self.try_command("(push 1)")? && self.try_command("(pop 1)")?;
        Ok(ok)
    }

    fn proc(&mut self) -> SolverResult<&mut Process> {
        if self.poisoned {
            return Err(SolverError::Poisoned);
        }
        self.proc.as_mut().ok_or(SolverError::Poisoned)
    }

    fn fail<T>(&mut self, e: SolverError) -> SolverResult<T> {
        self.poisoned = true;
        self.proc = None;
        Err(e)
    }

    fn read_reply(&mut self, wait: Duration) -> SolverResult<String> {
        match self.proc()?.recv(wait) {
            Ok(r) => Ok(r),
            Err(RecvTimeoutError::Timeout) => {
                self.fail(SolverError::Protocol("no reply from solver".into()))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.fail(SolverError::Crashed("output closed".into()))
            }
        }
    }

    /// Sends a command expecting `success`; `unsupported` yields `false`.
    fn try_command(&mut self, cmd: &str) -> SolverResult<bool> {
        if let Err(e) = self.proc()?.send(cmd) {
            return self.fail(e);
        }
        let reply = self.read_reply(COMMAND_WAIT)?;
        match reply.as_str() {
            "success" => Ok(true),
            "unsupported" => Ok(false),
            _ if reply.starts_with("(error") => {
                log::debug!("solver rejected `{cmd}`: {reply}");
                Ok(false)
            }
            _ => self.fail(SolverError::Protocol(format!(
                "unexpected reply to `{cmd}`: {reply}"
            ))),
        }
    }

    fn command(&mut self, cmd: &str) -> SolverResult<()> {
        match self.try_command(cmd)? {
            true => Ok(()),
            false if cmd.starts_with("(set-option") => Ok(()),
            false => self.fail(SolverError::Protocol(format!("solver rejected `{cmd}`"))),
        }
    }

    /// Sends a raw command and returns the solver's single reply.
    pub fn raw(&mut self, cmd: &str) -> SolverResult<String> {
        if let Err(e) = self.proc()?.send(cmd) {
            return self.fail(e);
        }
        self.read_reply(COMMAND_WAIT)
    }

    /// Declares every variable and function symbol of `f` not yet declared.
    pub fn declare(&mut self, f: &Formula) -> SolverResult<()> {
        let mut wanted: Vec<(String, Vec<Sort>, Sort)> = f
            .vars()
            .into_iter()
            .map(|v| (v.name, Vec::new(), v.sort))
            .collect();
        wanted.extend(f.functions());
        for (name, args, result) in wanted {
            match self.declared.get(&name) {
                Some((a, r)) if *a == args && *r == result => continue,
                Some(_) => {
                    // same name, new sort: start from a clean slate
                    let depth = self.depth;
                    if depth > 0 {
                        return self.fail(SolverError::Protocol(format!(
                            "symbol `{name}` redeclared with another sort inside a scope"
                        )));
                    }
                    self.restart()?;
                    return self.declare(f);
                }
                None => {}
            }
            let arg_sorts: Vec<&str> = args.iter().map(|s| sort_name(*s)).collect();
            self.command(&format!(
                "(declare-fun {} ({}) {})",
                symbol(&name),
                arg_sorts.join(" "),
                sort_name(result)
            ))?;
            self.declared.insert(name, (args, result));
        }
        Ok(())
    }

    /// Checks the conjunction of `assumptions`; on `sat` with `want_model`,
    /// returns the values of its free variables.
    pub fn check_sat(&mut self, assumptions: &[Formula], want_model: bool) -> SolverResult<SatResult> {
        self.check_sat_eval(assumptions, want_model, &[])
    }

    /// Like [`check_sat`](Self::check_sat), also evaluating `terms` in the model.
    pub fn check_sat_eval(
        &mut self,
        assumptions: &[Formula],
        want_model: bool,
        terms: &[Expr],
    ) -> SolverResult<SatResult> {
        if !self.incremental && self.queries > 0 {
            self.restart()?;
        }
        for a in assumptions.iter().chain(terms) {
            self.declare(a)?;
        }
        self.queries += 1;
        if self.incremental {
            self.command("(push 1)")?;
            self.depth += 1;
        }
        let result = self.run_query(assumptions, want_model, terms);
        if self.incremental && self.depth > 0 {
            match &result {
                Ok(_) => {
                    self.command("(pop 1)")?;
                    self.depth -= 1;
                }
                Err(_) => self.depth = 0,
            }
        }
        result
    }

    fn run_query(
        &mut self,
        assumptions: &[Formula],
        want_model: bool,
        terms: &[Expr],
    ) -> SolverResult<SatResult> {
        for a in assumptions {
            self.command(&format!("(assert {})", encode(a)))?;
        }
        if let Err(e) = self.proc()?.send("(check-sat)") {
            return self.fail(e);
        }
        let wait = Duration::from_millis(self.cfg.timeout_ms) + GRACE;
        let reply = match self.proc()?.recv(wait) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => {
                log::debug!("solver missed its deadline; replacing the process");
                self.depth = 0;
                self.restart()?;
                return Ok(SatResult::Unknown(UnknownReason::Timeout));
            }
            Err(RecvTimeoutError::Disconnected) => {
                return self.fail(SolverError::Crashed("output closed".into()))
            }
        };
        match reply.as_str() {
            "unsat" => Ok(SatResult::Unsat),
            "sat" => {
                if !(want_model && self.cfg.produce_models) {
                    return Ok(SatResult::Sat(None));
                }
                Ok(SatResult::Sat(self.model(assumptions, terms)?))
            }
            "unknown" => Ok(SatResult::Unknown(self.reason_unknown()?)),
            other => self.fail(SolverError::Protocol(format!(
                "unexpected reply to check-sat: {other}"
            ))),
        }
    }

    fn reason_unknown(&mut self) -> SolverResult<UnknownReason> {
        let reply = self.raw("(get-info :reason-unknown)")?;
        let text = reply.to_ascii_lowercase();
        if text.contains("timeout") || text.contains("canceled") || text.contains("cancelled") {
            Ok(UnknownReason::Timeout)
        } else {
            Ok(UnknownReason::Incomplete(reply))
        }
    }

    fn model(&mut self, assumptions: &[Formula], terms: &[Expr]) -> SolverResult<Option<Model>> {
        let mut vars: Vec<(String, Sort)> = Vec::new();
        for a in assumptions.iter().chain(terms) {
            for v in a.vars() {
                if !vars.iter().any(|(n, _)| *n == v.name) {
                    vars.push((v.name, v.sort));
                }
            }
        }
        let mut model = Model::default();
        if !vars.is_empty() {
            let q: Vec<String> = vars.iter().map(|(n, _)| symbol(n)).collect();
            let Some(values) = self.get_values(&q)? else {
                return Ok(None);
            };
            for ((name, _), v) in vars.iter().zip(values) {
                model.vars.insert(name.clone(), v);
            }
        }
        if !terms.is_empty() {
            let q: Vec<String> = terms.iter().map(encode).collect();
            let Some(values) = self.get_values(&q)? else {
                return Ok(None);
            };
            model.terms = values;
        }
        Ok(Some(model))
    }

    fn get_values(&mut self, terms: &[String]) -> SolverResult<Option<Vec<Value>>> {
        let reply = self.raw(&format!("(get-value ({}))", terms.join(" ")))?;
        if reply.starts_with("(error") {
            log::debug!("model unavailable: {reply}");
            return Ok(None);
        }
        let parsed = parse_sexp(&reply)
            .and_then(|s| s.list().map(|items| items.to_vec()))
            .ok_or_else(|| SolverError::Protocol(format!("bad get-value reply: {reply}")));
        let items = match parsed {
            Ok(items) => items,
            Err(e) => return self.fail(e),
        };
        let values: Option<Vec<Value>> = items
            .iter()
            .map(|pair| pair.list().filter(|p| p.len() == 2).and_then(|p| parse_value(&p[1])))
            .collect();
        match values {
            Some(v) if v.len() == terms.len() => Ok(Some(v)),
            _ => Ok(None),
        }
    }

    /// True when `hyp` provably entails `goal`; skips model extraction.
    pub fn proves(&mut self, hyp: &[Formula], goal: &Formula) -> SolverResult<bool> {
        let mut q = hyp.to_vec();
        q.push(Expr::not(goal.clone()));
        Ok(self.check_sat(&q, false)?.is_unsat())
    }

    /// Does the conjunction of `hyp` entail `goal`?
    pub fn entails(&mut self, hyp: &[Formula], goal: &Formula) -> SolverResult<Entailment> {
        let mut q = hyp.to_vec();
        q.push(Expr::not(goal.clone()));
        Ok(match self.check_sat(&q, true)? {
            SatResult::Unsat => Entailment::Yes,
            SatResult::Sat(m) => Entailment::No(m),
            SatResult::Unknown(r) => Entailment::Unknown(r),
        })
    }
}

fn parse_value(s: &Sexp) -> Option<Value> {
    match s {
        Sexp::Atom(a) if a == "true" => Some(Value::Bool(true)),
        Sexp::Atom(a) if a == "false" => Some(Value::Bool(false)),
        Sexp::Atom(a) => a.parse().ok().map(Value::Int),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(m), inner] if m == "-" => match parse_value(inner)? {
                Value::Int(n) => Some(Value::Int(-n)),
                Value::Bool(_) => None,
            },
            _ => None,
        },
    }
}
