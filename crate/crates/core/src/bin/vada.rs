use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use vada::config::{RunConfig, Scenario};
use vada::scenarios::{self, RunError};
use vada::verify::{run_verify, VerifyOptions, DEFAULT_DRAWS};

#[derive(Parser)]
#[command(name = "vada", version, about = "Antagonistic actuator numerics: coefficients, fibers, allocation, dynamics")]
struct Cli {
    /// derive-coeffs | fiber-sweep | allocate | simulate | verify
    scenario: String,

    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,

    /// Seed for randomized verification; overrides the config
    #[arg(long)]
    seed: Option<u64>,

    /// Directory for output files (created if missing)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, RunError> {
    let scenario: Scenario = cli.scenario.parse()?;
    let cfg = RunConfig::load(&cli.config)?;
    if let Some(declared) = cfg.scenario {
        if declared != scenario {
            return Err(vada::config::ConfigError::Invalid(format!(
                "config declares scenario {declared} but {scenario} was requested"
            ))
            .into());
        }
    }
    fs::create_dir_all(&cli.out).map_err(|e| RunError::Output(e.to_string()))?;

    match scenario {
        Scenario::DeriveCoeffs => {
            let record = scenarios::run_derive_coeffs(&cfg)?;
            println!("k_thrust = {}", record.k_thrust);
            println!("k_inflow = {}", record.k_inflow);
            for w in &record.warnings {
                eprintln!("warning: {w}");
            }
            emit_json(&record, &cli.out.join("derive_coeffs.json"))?;
            Ok(0)
        }
        Scenario::FiberSweep => {
            let out = scenarios::run_fiber_sweep(&cfg)?;
            let file = create(&cli.out.join("fiber_sweep.csv"))?;
            scenarios::write_fiber_csv(&out.rows, file)?;
            println!("{}", out.verdict_line());
            emit_json(&out, &cli.out.join("fiber_sweep.json"))?;
            Ok(if out.passed() { 0 } else { 1 })
        }
        Scenario::Allocate => {
            let out = scenarios::run_allocate(&cfg)?;
            emit_json(&out, &cli.out.join("allocation.json"))?;
            Ok(if out.result.feasible { 0 } else { 1 })
        }
        Scenario::Simulate => {
            let out = scenarios::run_simulate(&cfg)?;
            let file = create(&cli.out.join("trajectory.csv"))?;
            scenarios::write_trajectory_csv(&out.trajectory, file)?;
            emit_json(&out.summary, &cli.out.join("simulation.json"))?;
            Ok(0)
        }
        Scenario::Verify => {
            let section = cfg.verify.clone().unwrap_or_default();
            let report = run_verify(VerifyOptions {
                seed: cli.seed.unwrap_or(cfg.seed()),
                draws: section.draws.unwrap_or(DEFAULT_DRAWS),
                inject_non_hardening: section.inject_non_hardening,
            });
            emit_json(&report, &cli.out.join("verification.json"))?;
            eprintln!(
                "{} / {} checks passed{}",
                report.summary.passed,
                report.summary.total,
                if report.all_passed() {
                    String::new()
                } else {
                    format!("; failing: {}", report.summary.failed_properties.join(", "))
                }
            );
            Ok(if report.all_passed() { 0 } else { 1 })
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| RunError::Output(format!("{}: {e}", path.display())))
}

/// Writes `value` as pretty JSON to `path` and to stdout.
fn emit_json<T: Serialize>(value: &T, path: &Path) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Output(e.to_string()))?;
    let mut file = create(path)?;
    writeln!(file, "{text}").map_err(|e| RunError::Output(e.to_string()))?;
    writeln!(io::stdout(), "{text}").map_err(|e| RunError::Output(e.to_string()))
}
