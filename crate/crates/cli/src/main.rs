use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stargeo_cli::{run_scenario_file, verify};

#[derive(Parser)]
#[command(name = "stargeo", about = "Star-body regularizer experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario and write CSV/SVG/report artifacts.
    Run {
        /// Path to the scenario JSON file.
        scenario: PathBuf,
        /// Output root directory; artifacts land in `<out>/<name>/`.
        /// Defaults to the scenario's own `out` field, else `out/`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario grid resolution.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run the invariant check battery and print one line per check.
    Verify {
        /// Smaller grids and fewer repetitions.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            seed,
            grid,
        } => match run_scenario_file(&scenario, out.as_deref(), seed, grid) {
            Ok(summary) => {
                println!("wrote {}", summary.out_dir.display());
                if summary.all_checks_passed {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("one or more scenario checks failed; see report.json");
                    ExitCode::from(3)
                }
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Verify { quick, seed } => {
            let checks = verify::run_suite(quick, seed);
            let mut all = true;
            for c in &checks {
                println!(
                    "{} {} ({})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                all &= c.pass;
            }
            if all {
                println!("{} checks passed", checks.len());
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failures detected");
                ExitCode::from(3)
            }
        }
    }
}
