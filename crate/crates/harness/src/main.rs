use std::fs;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use doolp_harness::{
    parse_config, read_traces, run_grid, summarize, validate_all, write_outputs, write_summary,
    ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(
    name = "doolp",
    version,
    about = "Distributed online open loop planning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a config grid and write traces, summary and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "DOOLP_OUT_DIR", default_value = "results")]
        out: PathBuf,
        /// Worker threads (default: one per core).
        #[arg(long)]
        parallelism: Option<usize>,
        /// Override the master seed of every experiment.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file and report every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the per-step summary of a trace CSV.
    Summarize {
        #[arg(long)]
        traces: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let configs = parse_config(&text).map_err(|e| match e {
        HarnessError::Json(_) | HarnessError::Format(_) => {
            let mut report = doolp_core::ConfigError::default();
            report.push(format!("{}: {e}", path.display()));
            HarnessError::Validation(report)
        }
        other => other,
    })?;
    validate_all(&configs)?;
    Ok(configs)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            out,
            parallelism,
            seed,
        } => {
            let mut configs = load(&config)?;
            if let Some(seed) = seed {
                configs.iter_mut().for_each(|c| c.master_seed = seed);
            }
            let runs: usize = configs.iter().map(|c| c.repetitions).sum();
            eprintln!("running {} experiments, {runs} episodes", configs.len());
            let output = run_grid(&configs, parallelism)?;
            for path in write_outputs(&out, &output)? {
                eprintln!("wrote {}", path.display());
            }
            if !output.failures.is_empty() {
                for f in &output.failures {
                    eprintln!(
                        "failed: config {} ({}) run {}: {}",
                        f.config_index, f.config_id, f.run, f.message
                    );
                }
                return Err(HarnessError::Runtime(format!(
                    "{} of {runs} episodes failed",
                    output.failures.len()
                )));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let configs = load(&config)?;
            let runs: usize = configs.iter().map(|c| c.repetitions).sum();
            println!("ok: {} experiments, {runs} episodes", configs.len());
            Ok(())
        }
        Command::Summarize { traces } => {
            let traces = read_traces(fs::File::open(traces)?)?;
            write_summary(BufWriter::new(io::stdout().lock()), &summarize(&traces)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
