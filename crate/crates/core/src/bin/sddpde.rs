use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sddpde::config::{apply_override, RunConfig};
use sddpde::runner::{exit, exit_code, run_scenario};
use sddpde::Error;

#[derive(Parser)]
#[command(name = "sddpde", version, about = "Galerkin simulation and estimate checks for a delayed nonlocal parabolic equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON configuration.
    Run {
        config: PathBuf,
        /// single, ensemble, compare-delay or certify.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ensemble seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// `key.path=value`, applied in order before validation.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(config: &PathBuf, scenario: Option<String>, seed: Option<u64>, overrides: &[String]) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(config)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config { path: ".".into(), message: e.to_string() })?;
    if let Some(s) = scenario {
        apply_override(&mut value, &format!("scenario=\"{s}\""))?;
    }
    if let Some(s) = seed {
        apply_override(&mut value, &format!("seed={s}"))?;
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    RunConfig::from_value(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        scenario,
        out,
        seed,
        overrides,
    } = cli.command;
    let cfg = match load(&config, scenario, seed, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let out = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sddpde-out"));
    match run_scenario(&cfg, &out) {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            if outcome.pass {
                ExitCode::from(exit::PASS as u8)
            } else {
                eprintln!("one or more checks failed; see the report");
                ExitCode::from(exit::CHECK_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
