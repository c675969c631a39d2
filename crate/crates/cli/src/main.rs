use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlsfem_cli::checks::{run_suite, Suite};
use nlsfem_cli::config::RunConfig;
use nlsfem_cli::csv::eoc_csv;
use nlsfem_cli::error::EXIT_OK;
use nlsfem_cli::run::{evolve_command, groundstate_command, sibling_json, write_json, write_text};
use nlsfem_cli::study::{compute_reference, run_convergence, StudyMode};
use nlsfem_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "nlsfem", version, about = "Conservative FEM solver for nonlinear Schrödinger equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a normalized ground state and write it as a field file.
    Groundstate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the configured initial value and write logs, snapshots and a report.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Refinement study: error table CSV plus `<out>.json` manifest.
    Convergence {
        #[arg(long, value_parser = parse_mode)]
        mode: StudyMode,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a check suite and print its JSON report.
    Check {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> std::result::Result<StudyMode, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Groundstate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let gs = groundstate_command(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&gs).expect("summary serializes"));
        }
        Command::Evolve { config, out_dir } => {
            let cfg = RunConfig::load(&config)?;
            let stats = evolve_command(&cfg, &out_dir)?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
        }
        Command::Convergence { mode, config, out } => {
            let cfg = RunConfig::load(&config)?;
            let reference = compute_reference(&cfg)?;
            let study = run_convergence(mode, &cfg, &reference)?;
            write_text(&out, &eoc_csv(&study.table))?;
            write_json(&sibling_json(&out), &study.manifest(&cfg, &reference))?;
            println!("eoc {:?}", study.table.eoc);
            if !study.table.complete {
                return Err(CliError::StudyIncomplete {
                    failed: study.records.len() - study.table.rows.len(),
                    total: study.records.len(),
                });
            }
        }
        Command::Check { suite, seed, report } => {
            let r = run_suite(suite, seed);
            let text = serde_json::to_string_pretty(&r).expect("report serializes");
            println!("{text}");
            if let Some(path) = report {
                write_text(&path, &(text + "\n"))?;
            }
            if !r.passed {
                let names: Vec<&str> = r.failures().map(|c| c.name.as_str()).collect();
                return Err(CliError::CheckFailed(names.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
