//! Running an experiment grid and writing its outputs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use doolp_core::run_episode;
use doolp_core::stream::run_seed;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{validate_all, ExperimentConfig};
use crate::trace::{summarize, write_summary, write_traces, RunTrace, SummaryRow};
use crate::HarnessError;

pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub config_index: usize,
    pub config_id: String,
    pub run: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct GridOutput {
    pub configs: Vec<ExperimentConfig>,
    /// Sorted by grid position, then run.
    pub traces: Vec<RunTrace>,
    pub failures: Vec<RunFailure>,
}

impl GridOutput {
    pub fn summary(&self) -> Result<Vec<SummaryRow>, HarnessError> {
        if self.traces.is_empty() {
            return Ok(Vec::new());
        }
        summarize(&self.traces)
    }

    pub fn traces_for(&self, config_index: usize) -> impl Iterator<Item = &RunTrace> {
        let id = self.configs[config_index].config_id();
        self.traces.iter().filter(move |t| t.config_id == id)
    }
}

/// Runs `repetitions` episodes of every config. Run `r` of any config uses
/// the seed derived from `(master_seed, r)`, so configs sharing a master seed
/// see common random numbers and adding runs never changes earlier ones.
///
/// `parallelism` bounds the worker threads; `None` uses rayon's default.
pub fn run_grid(
    configs: &[ExperimentConfig],
    parallelism: Option<usize>,
) -> Result<GridOutput, HarnessError> {
    validate_all(configs)?;
    let ids: Vec<String> = configs.iter().map(ExperimentConfig::config_id).collect();
    let episodes: Vec<_> = configs.iter().map(ExperimentConfig::episode).collect();
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.repetitions as u64).map(move |r| (i, r)))
        .collect();

    let work = || {
        jobs.par_iter()
            .map(|&(i, run)| {
                let seed = run_seed(configs[i].master_seed, run);
                run_episode(&episodes[i], seed)
                    .map(|rewards| (i, RunTrace::new(ids[i].clone(), run, rewards)))
                    .map_err(|e| RunFailure {
                        config_index: i,
                        config_id: ids[i].clone(),
                        run,
                        message: e.to_string(),
                    })
            })
            .collect::<Vec<_>>()
    };
    let results = match parallelism {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => traces.push(t),
            Err(f) => failures.push(f),
        }
    }
    traces.sort_by_key(|(i, t)| (*i, t.run));
    failures.sort_by_key(|f| (f.config_index, f.run));
    Ok(GridOutput {
        configs: configs.to_vec(),
        traces: traces.into_iter().map(|(_, t)| t).collect(),
        failures,
    })
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    index: usize,
    config_id: String,
    completed_runs: usize,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiments: Vec<ManifestEntry<'a>>,
    failures: &'a [RunFailure],
}

/// Writes the trace CSV, summary CSV and manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, output: &GridOutput) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let traces_path = dir.join(TRACES_FILE);
    write_traces(BufWriter::new(File::create(&traces_path)?), &output.traces)?;

    let summary_path = dir.join(SUMMARY_FILE);
    write_summary(
        BufWriter::new(File::create(&summary_path)?),
        &output.summary()?,
    )?;

    let manifest = Manifest {
        experiments: output
            .configs
            .iter()
            .enumerate()
            .map(|(index, config)| {
                let config_id = config.config_id();
                let completed_runs = output
                    .traces
                    .iter()
                    .filter(|t| t.config_id == config_id)
                    .count();
                ManifestEntry {
                    index,
                    config_id,
                    completed_runs,
                    config,
                }
            })
            .collect(),
        failures: &output.failures,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    serde_json::to_writer_pretty(BufWriter::new(File::create(&manifest_path)?), &manifest)?;
    Ok(vec![traces_path, summary_path, manifest_path])
}
