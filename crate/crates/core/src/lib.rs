//! Loop invariant synthesis by abductive strengthening of verification conditions.

pub mod abduce;
pub mod ilinva;
pub mod lang;
pub mod parser;
pub mod solver;
pub mod vc;

pub use abduce::{abduce, Abducible, AbduciblePool, Hypothesis, SearchBudget};
pub use ilinva::{ilinva, DeepeningSchedule, Ilinva, Outcome, Stats, Synthesis, TraceEvent};
pub use lang::{Expr, Formula, Instr, Location, Program, Sort, Var};
pub use parser::{parse_formula, parse_program, render_program, ParseError};
pub use solver::{SolverConfig, SolverError, SolverSession};
pub use vc::{check_vc, vcgen, Vc, VcKind, VcSet, Verdict};
