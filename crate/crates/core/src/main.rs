use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdlopo::scenario::{run, Scenario, ScenarioName};
use pdlopo::Error;

/// Phase-difference-locked OPO simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Print the nominal calibrated config for a scenario and exit.
    #[arg(long, value_name = "SCENARIO", num_args = 0..=1, default_missing_value = "entanglement_report")]
    emit_defaults: Option<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Trajectory workers; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(name) = cli.emit_defaults {
        let name: ScenarioName = match name.parse() {
            Ok(n) => n,
            Err(e) => return exit_for(&e),
        };
        return match Scenario::nominal(name).to_toml_string() {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        };
    }
    let Some(Command::Run {
        config,
        seed,
        out,
        workers,
    }) = cli.command
    else {
        eprintln!("nothing to do: pass `run <config>` or `--emit-defaults` (see --help)");
        return ExitCode::from(2);
    };
    // A missing or unreadable config is a config error, not a runtime one.
    let mut scenario = match Scenario::load(&config) {
        Ok(s) => s,
        Err(Error::Io { path, source }) => {
            eprintln!("error: cannot read config {}: {source}", path.display());
            return ExitCode::from(2);
        }
        Err(e) => return exit_for(&e),
    };
    if let Some(seed) = seed {
        scenario.scenario.seed = seed;
    }
    match run(&scenario, &out, workers) {
        Ok(report) => {
            println!("scenario {} (seed {})", scenario.scenario.name, scenario.scenario.seed);
            for h in &report.headlines {
                println!("  {:<28} {:>14.6} {:<7} [{}]", h.name, h.value, h.unit, h.source);
            }
            println!(
                "  wrote {} files to {} in {:.2} s",
                report.artifacts.len(),
                out.display(),
                report.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => exit_for(&e),
    }
}
