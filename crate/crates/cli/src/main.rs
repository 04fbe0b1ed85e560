use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chp_cli::commands::{report_json, write_report_files};
use chp_cli::{cmd_convergence, cmd_run, cmd_verify, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "chp", version, about = "Convex hull property laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, write its artifacts and check the verdict.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Add the origin to the hull.
        #[arg(long)]
        include_zero: bool,
    },
    /// Refinement study against a closed-form solution.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a dumped field (CSV) or trajectory (`times.csv`).
    Verify {
        input: PathBuf,
        /// Hull vertices to check against instead of the dump's own boundary hull.
        #[arg(long)]
        hull: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        include_zero: bool,
        /// Also write report.json, hull.csv and eta.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, out, tolerance, include_zero } => {
            let (outcome, dir) = cmd_run(&config, &RunOptions { out, tolerance, include_zero })?;
            match &outcome {
                chp_cli::Outcome::Report { report, expect } => eprintln!(
                    "{}: max violation {:e} (tolerance {:e}), expected {:?}; artifacts in {}",
                    report.verdict,
                    report.max_violation,
                    report.tolerance,
                    expect,
                    dir.display()
                ),
                chp_cli::Outcome::Convergence(rows) => eprintln!("{} levels written to {}", rows.len(), dir.display()),
            }
            Ok(outcome.exit_code())
        }
        Command::Convergence { config, out } => {
            let (rows, dir) = cmd_convergence(&config, out.as_deref())?;
            for r in &rows {
                let eoc = r.eoc.map(|e| format!("{e:.3}")).unwrap_or_default();
                println!("{:e}\t{:e}\t{eoc}", r.h_or_dt, r.error);
            }
            eprintln!("table written to {}", dir.join("convergence.csv").display());
            Ok(0)
        }
        Command::Verify { input, hull, tolerance, include_zero, out } => {
            let report = cmd_verify(&input, hull.as_deref(), tolerance, include_zero)?;
            print!("{}", report_json(&report)?);
            if let Some(dir) = out {
                write_report_files(&report, &dir)?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
