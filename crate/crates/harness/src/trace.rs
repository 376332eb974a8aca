//! Run traces, summaries and their CSV forms.
//!
//! Trace rows are `config_id,run,step,reward,cum_reward`; summary rows are
//! `config_id,step,mean_cum_reward,std_cum_reward`. Steps start at 0. Floats
//! are written in their shortest round-trip form, so parsing a written file
//! gives back the exact values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Realized rewards of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub config_id: String,
    pub run: u64,
    pub rewards: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RunTrace {
    pub fn new(config_id: impl Into<String>, run: u64, rewards: Vec<f64>) -> Self {
        let cumulative = rewards
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect();
        Self {
            config_id: config_id.into(),
            run,
            rewards,
            cumulative,
        }
    }

    pub fn final_cumulative(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    config_id: String,
    run: u64,
    step: usize,
    reward: f64,
    cum_reward: f64,
}

/// Per-step mean and sample standard deviation of the cumulative reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config_id: String,
    pub step: usize,
    pub mean_cum_reward: f64,
    pub std_cum_reward: f64,
}

pub fn write_traces<W: Write>(writer: W, traces: &[RunTrace]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    // header is written even without rows
    w.write_record(["config_id", "run", "step", "reward", "cum_reward"])?;
    for t in traces {
        for (step, (&reward, &cum_reward)) in t.rewards.iter().zip(&t.cumulative).enumerate() {
            w.write_record(&[
                t.config_id.clone(),
                t.run.to_string(),
                step.to_string(),
                reward.to_string(),
                cum_reward.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads traces back, in file order. Rows of one run must be contiguous
/// and numbered `0, 1, 2, ...`.
pub fn read_traces<R: Read>(reader: R) -> Result<Vec<RunTrace>, HarnessError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut traces: Vec<RunTrace> = Vec::new();
    for row in r.deserialize() {
        let row: TraceRow = row?;
        let continues = traces
            .last()
            .is_some_and(|t| t.config_id == row.config_id && t.run == row.run);
        if !continues {
            traces.push(RunTrace {
                config_id: row.config_id.clone(),
                run: row.run,
                rewards: Vec::new(),
                cumulative: Vec::new(),
            });
        }
        let trace = traces.last_mut().expect("just pushed");
        if row.step != trace.rewards.len() {
            return Err(HarnessError::Format(format!(
                "config {} run {}: expected step {}, found {}",
                row.config_id,
                row.run,
                trace.rewards.len(),
                row.step
            )));
        }
        trace.rewards.push(row.reward);
        trace.cumulative.push(row.cum_reward);
    }
    Ok(traces)
}

/// Groups traces by config (in order of first appearance) and summarizes
/// each step across runs. The standard deviation uses divisor `n - 1` and
/// is `0` for a single run.
pub fn summarize(traces: &[RunTrace]) -> Result<Vec<SummaryRow>, HarnessError> {
    if traces.is_empty() {
        return Err(HarnessError::Format("no traces to summarize".into()));
    }
    let mut groups: Vec<(&str, Vec<&RunTrace>)> = Vec::new();
    for t in traces {
        match groups.iter_mut().find(|(id, _)| *id == t.config_id) {
            Some((_, runs)) => runs.push(t),
            None => groups.push((&t.config_id, vec![t])),
        }
    }

    let mut rows = Vec::new();
    for (id, runs) in groups {
        let steps = runs[0].cumulative.len();
        if let Some(bad) = runs.iter().find(|t| t.cumulative.len() != steps) {
            return Err(HarnessError::Format(format!(
                "config {id}: run {} has {} steps, run {} has {steps}",
                bad.run,
                bad.cumulative.len(),
                runs[0].run
            )));
        }
        let n = runs.len() as f64;
        for step in 0..steps {
            let mean = runs.iter().map(|t| t.cumulative[step]).sum::<f64>() / n;
            let std = if runs.len() > 1 {
                let ss: f64 = runs
                    .iter()
                    .map(|t| (t.cumulative[step] - mean).powi(2))
                    .sum();
                (ss / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                config_id: id.to_owned(),
                step,
                mean_cum_reward: mean,
                std_cum_reward: std,
            });
        }
    }
    Ok(rows)
}

pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["config_id", "step", "mean_cum_reward", "std_cum_reward"])?;
    for row in rows {
        w.write_record(&[
            row.config_id.clone(),
            row.step.to_string(),
            row.mean_cum_reward.to_string(),
            row.std_cum_reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(reader: R) -> Result<Vec<SummaryRow>, HarnessError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(HarnessError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_sums() {
        let t = RunTrace::new("a", 0, vec![1.0, -2.0, 4.0]);
        assert_eq!(t.cumulative, [1.0, -1.0, 3.0]);
        assert_eq!(t.final_cumulative(), 3.0);
    }

    #[test]
    fn single_run_summary() {
        let t = RunTrace::new("a", 0, vec![1.0, 2.0]);
        let rows = summarize(&[t]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(
            (rows[1].mean_cum_reward, rows[1].std_cum_reward),
            (3.0, 0.0)
        );
    }

    #[test]
    fn two_run_summary() {
        let rows = summarize(&[
            RunTrace::new("a", 0, vec![4.0]),
            RunTrace::new("a", 1, vec![6.0]),
        ])
        .unwrap();
        assert_eq!(rows[0].mean_cum_reward, 5.0);
        assert!((rows[0].std_cum_reward - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_traces_have_zero_spread() {
        let traces: Vec<_> = (0..5)
            .map(|r| RunTrace::new("c", r, vec![1.5; 4]))
            .collect();
        assert!(summarize(&traces)
            .unwrap()
            .iter()
            .all(|r| r.std_cum_reward == 0.0));
    }

    #[test]
    fn summary_errors() {
        assert!(summarize(&[]).is_err());
        let ragged = [
            RunTrace::new("a", 0, vec![1.0]),
            RunTrace::new("a", 1, vec![1.0, 2.0]),
        ];
        assert!(summarize(&ragged).is_err());
    }

    #[test]
    fn groups_keep_first_appearance_order() {
        let traces = [
            RunTrace::new("z", 0, vec![1.0]),
            RunTrace::new("a", 0, vec![2.0]),
            RunTrace::new("z", 1, vec![3.0]),
        ];
        let rows = summarize(&traces).unwrap();
        assert_eq!(rows[0].config_id, "z");
        assert_eq!(rows[0].mean_cum_reward, 2.0);
        assert_eq!(rows[1].config_id, "a");
    }

    #[test]
    fn trace_rows_and_header() {
        let mut buf = Vec::new();
        write_traces(&mut buf, &[RunTrace::new("id", 3, vec![0.5, 29.0])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "config_id,run,step,reward,cum_reward\nid,3,0,0.5,0.5\nid,3,1,29,29.5\n"
        );
    }

    #[test]
    fn rejects_gaps_in_steps() {
        let text = "config_id,run,step,reward,cum_reward\na,0,0,1,1\na,0,2,1,2\n";
        assert!(read_traces(text.as_bytes()).is_err());
    }
}
