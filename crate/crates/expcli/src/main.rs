use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rfcurve_cli::runner::{self, RunOptions};
use rfcurve_cli::{RunConfig, Summary};

/// Reproducible random-field curve experiments.
///
/// Exit status: 0 when every check passed, 1 on a violated check, 2 on a
/// configuration or runtime error. The worker count is read from
/// RFCURVE_WORKERS.
#[derive(Parser)]
#[command(name = "rfcurve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run or resume the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Output directory, replacing the configured one.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute the summary of a record file.
    Summarize { records: PathBuf },
    /// Re-check the invariants of a record file.
    Verify {
        records: PathBuf,
        /// Recompute this many records and compare them bit for bit.
        #[arg(long, default_value_t = 0)]
        recompute: usize,
    },
    /// Write the records of one experiment as CSV to stdout.
    Plotdata {
        records: PathBuf,
        #[arg(long)]
        experiment: String,
    },
    /// List the available experiments.
    List,
}

fn report(summary: &Summary) -> ExitCode {
    for c in &summary.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    if summary.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> rfcurve_cli::Result<ExitCode> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = RunConfig::load(&config)?;
            let out = runner::run(&cfg, &RunOptions { workers: 0, output })?;
            eprintln!(
                "{}: {} units computed, {} resumed, output in {}",
                cfg.experiment,
                out.computed,
                out.resumed,
                out.dir.display()
            );
            Ok(report(&out.summary))
        }
        Command::Summarize { records } => Ok(report(&runner::summarize_dir(&records)?)),
        Command::Verify { records, recompute } => {
            let r = runner::verify(&records, recompute)?;
            for p in &r.problems {
                println!("FAIL {p}");
            }
            println!("{} records checked, {} recomputed, {} problems", r.records, r.recomputed, r.problems.len());
            Ok(if r.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Plotdata { records, experiment } => {
            runner::plotdata(&records, &experiment, std::io::stdout().lock())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::List => {
            for e in rfcurve_cli::experiments::experiments() {
                println!("{:<16} {}", e.name(), e.description());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
