//! Scenario runner for the coupled-NLS toolkit. The runnable examples are
//! the richer entry point; this binary wraps the same scenarios behind a
//! config file for scripted runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlss::error::NlssError;
use nlss::scenario::{run_scenario, selfcheck, ScenarioConfig};

#[derive(Parser)]
#[command(name = "nlss", about = "Coupled cubic Schrödinger toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config file.
    Run {
        /// Path to the scenario config.
        config: PathBuf,
        /// Exit nonzero if any scenario assertion fails.
        #[arg(long)]
        assert: bool,
        /// Worker threads (NLSS_THREADS overrides).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the fast cross-module invariant suite.
    Selfcheck,
    /// Reference computations that bypass the spectral path.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Radial shooting solve of the ground-state profile; prints the pinned
    /// squared mass and on-axis amplitude.
    GroundState,
}

fn configure_threads(cli_threads: Option<usize>) {
    let threads = std::env::var("NLSS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli_threads);
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            assert,
            threads,
            out,
        } => {
            configure_threads(threads);
            let cfg = match ScenarioConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            match run_scenario(&cfg, &out_dir) {
                Ok(summary) => {
                    println!(
                        "scenario {:?}: {} values, {}/{} assertions passed -> {}",
                        summary.scenario,
                        summary.values.len(),
                        summary.assertions.iter().filter(|a| a.passed).count(),
                        summary.assertions.len(),
                        out_dir.join("summary.json").display()
                    );
                    for a in &summary.assertions {
                        println!(
                            "  [{}] {}: {}",
                            if a.passed { "pass" } else { "FAIL" },
                            a.name,
                            a.detail
                        );
                    }
                    if assert && !summary.all_passed() {
                        return ExitCode::from(1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e @ NlssError::Usage(_)) | Err(e @ NlssError::Config(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Selfcheck => match selfcheck() {
            Ok(report) => {
                for c in &report.checks {
                    println!(
                        "{} {} ({})",
                        if c.passed { "pass" } else { "FAIL" },
                        c.name,
                        c.detail
                    );
                }
                if report.all_passed() {
                    println!("selfcheck: all {} checks passed", report.checks.len());
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Oracle { which } => match which {
            OracleCommand::GroundState => {
                let p = nlss::oracle::shoot_ground_state(5e-4, 15.0);
                println!("amplitude q(0) = {:.12}", p.amplitude);
                println!("mass_sq        = {:.12}", p.mass_sq);
                let (kin, quart) = p.pohozaev_integrals();
                println!("kinetic        = {:.12}", kin);
                println!("quartic        = {:.12}", quart);
                ExitCode::SUCCESS
            }
        },
    }
}
