use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use invforge::SolverConfig;
use invforge_cli::{bench_table, cmd_bench, cmd_check, cmd_synth, CliError, RunReport, SynthOptions};

#[derive(Parser)]
#[command(name = "invforge", version, about = "Loop invariant synthesis by abduction")]
struct Cli {
    /// Per-query solver timeout.
    #[arg(long, global = true, default_value_t = 1000)]
    solver_timeout_ms: u64,

    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct SynthArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    disjuncts: u8,
    #[arg(long, default_value_t = 2)]
    max_depth: usize,
    #[arg(long, default_value_t = 2)]
    max_size: usize,
    /// Wall-clock budget per file, in seconds.
    #[arg(long, default_value_t = 120)]
    budget_s: u64,
}

impl SynthArgs {
    fn options(&self) -> SynthOptions {
        SynthOptions {
            disjuncts: self.disjuncts as usize,
            max_depth: self.max_depth,
            max_size: self.max_size,
            budget: Duration::from_secs(self.budget_s),
            ..SynthOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the verification conditions of an annotated program.
    Check { file: PathBuf },
    /// Synthesize loop invariants and write `<file>.solved.imp`.
    Synth {
        file: PathBuf,
        #[command(flatten)]
        args: SynthArgs,
        /// Log every candidate as a JSON line on stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Synthesize every program of a directory and print a summary table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        args: SynthArgs,
    },
}

fn print(report: &RunReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).unwrap_or_default());
    } else {
        println!("{report}");
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let solver = SolverConfig::from_env().with_timeout_ms(cli.solver_timeout_ms);
    match cli.cmd {
        Cmd::Check { file } => {
            let r = cmd_check(&file, &solver)?;
            print(&r, cli.json);
            Ok(r.outcome.exit_code())
        }
        Cmd::Synth { file, args, trace } => {
            let mut opts = args.options();
            if trace {
                opts.trace = Some(Box::new(std::io::stderr()));
            }
            let r = cmd_synth(&file, &solver, opts)?;
            print(&r, cli.json);
            Ok(r.outcome.exit_code())
        }
        Cmd::Bench { dir, args } => {
            let rows = cmd_bench(&dir, &solver, || SynthOptions {
                write_output: false,
                ..args.options()
            })?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rows).unwrap_or_default());
            } else {
                print!("{}", bench_table(&rows));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("invforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
