//! sketchbench: experiment driver for the sketching lower-bound toolkit.
//!
//! Every subcommand prints (or writes to `--out`) a JSON run report and exits
//! 0 iff all asserted invariants passed, 1 on an invariant failure or error,
//! and 2 on a usage error.

mod commands;
mod report;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;

use report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "sketchbench", version, about = "Sketching lower-bound experiments")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "SKETCHBENCH_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for data-parallel steps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: commands::Command,
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let name = cli.command.name();
    let parameters = cli.command.parameters()?;
    let ctx = commands::RunContext {
        seed: cli.seed,
        out: cli.out.clone(),
    };
    let start = Instant::now();
    let outcome = cli.command.execute(&ctx)?;
    let elapsed = start.elapsed().as_millis();
    let report = RunReport::assemble(name, parameters, cli.seed, outcome, elapsed)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &cli.out {
        Some(path) => {
            fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            println!(
                "{name}: {} ({})",
                if report.passed { "pass" } else { "FAIL" },
                path.display()
            );
        }
        None => {
            // a closed pipe (e.g. `| head`) is not a failure of the run
            let _ = writeln!(std::io::stdout().lock(), "{json}");
        }
    }
    for (inv, tally) in report.outcomes.iter().filter(|(_, t)| t.fail > 0) {
        eprintln!("invariant {inv} failed {} of {} times", tally.fail, tally.pass + tally.fail);
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
