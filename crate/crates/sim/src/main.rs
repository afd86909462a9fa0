use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dcm_sim::compare::{compare_architectures, sweep, write_comparison_csv, write_sweep_csv};
use dcm_sim::{run_scenario, Scenario, SimError};

#[derive(Parser)]
#[command(name = "dcm-sim", version, about = "Closed-loop DCM walking simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write traces.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario's architecture at each forward speed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated forward speeds in m/s.
        #[arg(long, value_delimiter = ',', required = true)]
        velocities: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Largest no-fall speed for each controller and whole-body mode.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(dir: &Path, name: &str) -> Result<fs::File, SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::File::create(&path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<String, SimError> {
    match command {
        Command::Run { config, seed, out } => {
            let mut scenario = Scenario::from_file(&config)?;
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            let result = run_scenario(&scenario)?;
            result.write_outputs(&out)?;
            Ok(result.summary_json())
        }
        Command::Sweep { config, velocities, out } => {
            let scenario = Scenario::from_file(&config)?;
            let points = sweep(&scenario, &[scenario.architecture], &velocities)?;
            write_sweep_csv(&points, create(&out, "sweep.csv")?)?;
            Ok(serde_json::to_string_pretty(&points).expect("sweep serializes"))
        }
        Command::Compare { config, out } => {
            let scenario = Scenario::from_file(&config)?;
            let (rows, points) = compare_architectures(&scenario, &scenario.sweep_velocities)?;
            write_comparison_csv(&rows, create(&out, "comparison.csv")?)?;
            write_sweep_csv(&points, create(&out, "sweep.csv")?)?;
            let mut buf = Vec::new();
            write_comparison_csv(&rows, &mut buf)?;
            Ok(String::from_utf8(buf).expect("csv is utf-8"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
