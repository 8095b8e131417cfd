//! Command-line front end: run scenarios to CSV logs, validate input
//! files, emit the bundled reference scenario, and re-audit logs
//! offline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uvms_core::model_file::{load_model, load_scenario};
use uvms_core::sim::{paper_scenario, run_scenario, SimLog, PAPER_SCENARIO_TOML};
use uvms_core::verify::envelope_battery;

#[derive(Parser)]
#[command(
    name = "uvms-sim",
    about = "Underwater vehicle-manipulator force-control simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the trajectory log as CSV.
    Run {
        /// Scenario file, or the word `paper` for the bundled scenario.
        scenario: String,
        /// Output CSV path (defaults to `<scenario name>.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the simulated duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Parse and validate scenario or model files without running them.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print the bundled reference scenario as an editable TOML file.
    PaperScenario,
    /// Re-check funnel containment on a previously written log.
    CheckInvariants { log: PathBuf },
}

/// Exit 1: a simulation or validation assertion failed.
/// Exit 2: the invocation itself was unusable (bad flags, missing file).
fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

enum Failure {
    Assertion(String),
    Usage(String),
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            out,
            seed,
            duration,
        } => run(&scenario, out, seed, duration),
        Command::Validate { files } => validate(&files),
        Command::PaperScenario => {
            print!("{PAPER_SCENARIO_TOML}");
            Ok(())
        }
        Command::CheckInvariants { log } => check_invariants(&log),
    }
}

fn run(
    scenario_arg: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    duration: Option<f64>,
) -> Result<(), Failure> {
    let mut scenario = if scenario_arg == "paper" && !Path::new(scenario_arg).exists() {
        paper_scenario()
    } else {
        load_scenario(Path::new(scenario_arg))
            .map_err(|e| Failure::Usage(format!("cannot load scenario: {e}")))?
    };
    if let Some(seed) = seed {
        scenario = scenario.with_seed(seed);
    }
    if let Some(duration) = duration {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Failure::Usage(format!(
                "duration must be a positive number of seconds, got {duration}"
            )));
        }
        scenario = scenario.with_duration(duration);
    }
    let log = run_scenario(&scenario)
        .map_err(|e| Failure::Assertion(format!("simulation failed: {e}")))?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.name)));
    log.save_csv(&out)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", out.display())))?;
    let report = envelope_battery(&log);
    println!(
        "{}: {} records over {:.3} s -> {}",
        scenario.name,
        log.records.len(),
        scenario.duration,
        out.display()
    );
    println!("{report}");
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Assertion("envelope containment violated".into()))
    }
}

fn validate(files: &[PathBuf]) -> Result<(), Failure> {
    let mut failed = false;
    for path in files {
        // A file is accepted if it parses as either input kind.
        match load_scenario(path) {
            Ok(s) => {
                println!("{}: valid scenario `{}`", path.display(), s.name);
                continue;
            }
            Err(scenario_err) => match load_model(path) {
                Ok(_) => {
                    println!("{}: valid model", path.display());
                    continue;
                }
                Err(model_err) => {
                    failed = true;
                    eprintln!(
                        "{}: invalid\n  as scenario: {scenario_err}\n  as model: {model_err}",
                        path.display()
                    );
                }
            },
        }
    }
    if failed {
        Err(Failure::Assertion("validation failed".into()))
    } else {
        Ok(())
    }
}

fn check_invariants(path: &Path) -> Result<(), Failure> {
    let log = SimLog::load_csv(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let report = envelope_battery(&log);
    println!("{report}");
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Assertion("envelope containment violated".into()))
    }
}
