//! `wentzell-lab`: runs JSON scenarios against the Wentzell bi-Laplacian
//! laboratory and writes CSV, JSON and SVG outputs.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for
//! configuration errors and 3 for numerical or I/O failures.

mod config;
mod error;
mod plot;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, ScenarioConfig};
use error::CliError;

const BUNDLED: [(&str, &str); 19] = [
    ("oracle_agreement", include_str!("../../../scenarios/oracle_agreement.json")),
    ("kernel_interval", include_str!("../../../scenarios/kernel_interval.json")),
    ("kernel_square", include_str!("../../../scenarios/kernel_square.json")),
    ("semibounded_disk", include_str!("../../../scenarios/semibounded_disk.json")),
    ("semibounded_square", include_str!("../../../scenarios/semibounded_square.json")),
    ("decay_zero_gamma", include_str!("../../../scenarios/decay_zero_gamma.json")),
    ("stability_positive_gamma", include_str!("../../../scenarios/stability_positive_gamma.json")),
    ("growth_negative_gamma", include_str!("../../../scenarios/growth_negative_gamma.json")),
    ("semigroup_law", include_str!("../../../scenarios/semigroup_law.json")),
    ("green_interval", include_str!("../../../scenarios/green_interval.json")),
    ("green_square", include_str!("../../../scenarios/green_square.json")),
    ("nonpositivity", include_str!("../../../scenarios/nonpositivity.json")),
    ("eventual_positivity", include_str!("../../../scenarios/eventual_positivity.json")),
    ("gamma_sweep", include_str!("../../../scenarios/gamma_sweep.json")),
    ("monotone_gamma_interval", include_str!("../../../scenarios/monotone_gamma_interval.json")),
    ("monotone_gamma_square", include_str!("../../../scenarios/monotone_gamma_square.json")),
    ("evolve_boundary_datum", include_str!("../../../scenarios/evolve_boundary_datum.json")),
    ("variable_coefficients", include_str!("../../../scenarios/variable_coefficients.json")),
    ("clamped_sweep_square", include_str!("../../../scenarios/clamped_sweep_square.json")),
];

#[derive(Parser)]
#[command(name = "wentzell-lab", version, about = "Wentzell bi-Laplacian scenarios")]
struct Cli {
    /// List the bundled scenarios and exit.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, kernel classification and Rayleigh quotient bounds.
    Spectrum(RunArgs),
    /// Semigroup evolution of initial data with decay or growth checks.
    Evolve(RunArgs),
    /// First eigenvalue along a ladder of boundary potentials.
    GammaSweep(RunArgs),
    /// Non-positivity witnesses and eventual positivity times.
    Positivity(RunArgs),
    /// FEM eigenvalues against the 1D characteristic determinant.
    OracleCompare(RunArgs),
    /// Discrete Green identity on random pairs.
    GreenCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Command {
    fn split(&self) -> (Experiment, &RunArgs) {
        match self {
            Command::Spectrum(a) => (Experiment::Spectrum, a),
            Command::Evolve(a) => (Experiment::Evolve, a),
            Command::GammaSweep(a) => (Experiment::GammaSweep, a),
            Command::Positivity(a) => (Experiment::Positivity, a),
            Command::OracleCompare(a) => (Experiment::OracleCompare, a),
            Command::GreenCheck(a) => (Experiment::GreenCheck, a),
        }
    }
}

fn list() -> Result<(), CliError> {
    for (name, text) in BUNDLED {
        let config = ScenarioConfig::from_json(text).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        println!(
            "{name:<26} {:<15} {}",
            config.experiment.to_string(),
            config.description.as_deref().unwrap_or("")
        );
    }
    Ok(())
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<bool, CliError> {
    let config = ScenarioConfig::load(&args.config)?;
    if config.experiment != experiment {
        return Err(CliError::Config(format!(
            "{}: experiment is '{}' but the subcommand is '{experiment}'",
            args.config.display(),
            config.experiment
        )));
    }
    let report = scenario::run_scenario(&config, &args.out_dir, args.seed)?;
    let path = args.out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    write(&path, &json)?;
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    Ok(report.passed)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match (&cli.command, cli.list) {
        (_, true) => list().map(|_| true),
        (Some(command), false) => {
            let (experiment, args) = command.split();
            run(experiment, args)
        }
        (None, false) => Err(CliError::Config("give a subcommand or --list".into())),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
