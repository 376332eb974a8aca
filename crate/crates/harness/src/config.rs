//! Experiment configuration files.
//!
//! A config file is one JSON object holding the fields of
//! [`ExperimentConfig`] (all optional, defaults below) plus an optional
//! `grid` object. Each `grid` entry maps a field name to a list of values;
//! the file expands to the Cartesian product of those lists. Nested fields
//! are addressed with dots, e.g. `"factory.generator.items": [4, 8]`.
//!
//! ```json
//! {
//!   "repetitions": 50,
//!   "episode_steps": 50,
//!   "grid": {
//!     "strategy": ["dots", "epsilon_greedy", "ucb", "vmc"],
//!     "budget": [64, 128, 256, 512]
//!   }
//! }
//! ```

use std::collections::BTreeMap;

use doolp_core::engine::{CoordinationConfig, DroppedAgentFiller, EngineSettings, EpisodeConfig};
use doolp_core::factory::{FactorySpec, MachineSpec};
use doolp_core::{ConfigError, NormalGammaParams, Strategy};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Dots,
    EpsilonGreedy,
    Ucb,
    Vmc,
}

impl StrategyName {
    pub const ALL: [StrategyName; 4] = [Self::Dots, Self::EpsilonGreedy, Self::Ucb, Self::Vmc];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillerName {
    #[default]
    Noop,
    LastKnown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mu0: f64,
    pub lambda0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        let p = NormalGammaParams::default();
        Self {
            mu0: p.mu0(),
            lambda0: p.lambda0(),
            alpha0: p.alpha0(),
            beta0: p.beta0(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    pub processing_type: usize,
    #[serde(default = "default_cost")]
    pub cost: f64,
    #[serde(default)]
    pub failure_prob: f64,
}

fn default_cost() -> f64 {
    FactorySpec::DEFAULT_COST
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub items: usize,
    pub tasks_per_item: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            items: 8,
            tasks_per_item: 8,
            seed: 0,
        }
    }
}

/// Factory section. Items come either from explicit task lists or from the
/// generator; explicit lists win when both are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactoryConfig {
    pub machines: Vec<MachineConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    pub task_reward: f64,
    pub completion_reward: f64,
}

impl Default for FactoryConfig {
    /// 8 items with 8 tasks each, 4 machines of distinct types.
    fn default() -> Self {
        Self::generated(&[0.1, 0.2, 0.3, 0.2], 8, 8)
    }
}

impl FactoryConfig {
    /// Unit-cost machines of types `0..failure_probs.len()` and generated items.
    pub fn generated(failure_probs: &[f64], items: usize, tasks_per_item: usize) -> Self {
        Self {
            machines: FactorySpec::uniform_machines(failure_probs)
                .into_iter()
                .map(|m| MachineConfig {
                    processing_type: m.processing_type,
                    cost: m.cost,
                    failure_prob: m.failure_prob,
                })
                .collect(),
            items: None,
            generator: Some(GeneratorConfig {
                items,
                tasks_per_item,
                seed: 0,
            }),
            task_reward: FactorySpec::DEFAULT_TASK_REWARD,
            completion_reward: FactorySpec::DEFAULT_COMPLETION_REWARD,
        }
    }

    /// 4 items with 16 tasks each, 2 machines.
    pub fn desk() -> Self {
        Self::generated(&[0.1, 0.2], 4, 16)
    }

    pub fn to_spec(&self, eject_on_failure: bool) -> FactorySpec {
        let machines: Vec<MachineSpec> = self
            .machines
            .iter()
            .map(|m| MachineSpec {
                processing_type: m.processing_type,
                cost: m.cost,
                failure_prob: m.failure_prob,
            })
            .collect();
        let mut spec = match (&self.items, &self.generator) {
            (Some(items), _) => FactorySpec::new(machines, items.clone()),
            (None, Some(g)) => FactorySpec::generated(machines, g.items, g.tasks_per_item, g.seed),
            (None, None) => FactorySpec::new(machines, Vec::new()),
        };
        spec.task_reward = self.task_reward;
        spec.completion_reward = self.completion_reward;
        spec.eject_on_failure = eject_on_failure;
        spec
    }
}

/// One experiment: a strategy and its parameters, repeated `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: StrategyName,
    /// Simulations per execution step.
    pub budget: usize,
    pub drop_rate: f64,
    pub repetitions: usize,
    pub episode_steps: usize,
    pub horizon: usize,
    pub window_capacity: usize,
    pub prior: PriorConfig,
    pub epsilon: f64,
    pub ucb_c: f64,
    pub factory: FactoryConfig,
    pub master_seed: u64,
    pub reset_buffers_on_execute: bool,
    pub budget_per_agent: bool,
    pub eject_on_failure: bool,
    pub dropped_agent_filler: FillerName,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyName::Dots,
            budget: 64,
            drop_rate: 0.0,
            repetitions: 50,
            episode_steps: 50,
            horizon: 4,
            window_capacity: 10,
            prior: PriorConfig::default(),
            epsilon: Strategy::DEFAULT_EPSILON,
            ucb_c: Strategy::DEFAULT_UCB_C,
            factory: FactoryConfig::default(),
            master_seed: 0,
            reset_buffers_on_execute: true,
            budget_per_agent: true,
            eject_on_failure: false,
            dropped_agent_filler: FillerName::Noop,
        }
    }
}

impl ExperimentConfig {
    pub fn strategy(&self) -> Strategy {
        match self.strategy {
            StrategyName::Dots => Strategy::Thompson,
            StrategyName::EpsilonGreedy => Strategy::EpsilonGreedy {
                epsilon: self.epsilon,
            },
            StrategyName::Ucb => Strategy::Ucb { c: self.ucb_c },
            StrategyName::Vmc => Strategy::Uniform,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = ConfigError::default();
        if self.repetitions == 0 {
            errors.push("repetitions must be at least 1");
        }
        if self.episode_steps == 0 {
            errors.push("episode_steps must be at least 1");
        }
        let p = self.prior;
        let prior = NormalGammaParams::new(p.mu0, p.lambda0, p.alpha0, p.beta0);
        if prior.is_none() {
            errors.push("prior needs finite mu0 and positive lambda0, alpha0, beta0");
        }
        if self.factory.items.is_none() && self.factory.generator.is_none() {
            errors.push("factory needs either `items` or `generator`");
        }
        if prior.is_some() {
            if let Err(e) = self.episode().validate() {
                errors.violations.extend(e.violations);
            }
        }
        errors.into_result()
    }

    /// The core episode description. Call [`validate`](Self::validate) first;
    /// an invalid prior falls back to the default prior here.
    pub fn episode(&self) -> EpisodeConfig {
        let p = self.prior;
        EpisodeConfig {
            factory: self.factory.to_spec(self.eject_on_failure),
            strategy: self.strategy(),
            horizon: self.horizon,
            window: self.window_capacity,
            prior: NormalGammaParams::new(p.mu0, p.lambda0, p.alpha0, p.beta0).unwrap_or_default(),
            coordination: CoordinationConfig {
                drop_rate: self.drop_rate,
                filler: match self.dropped_agent_filler {
                    FillerName::Noop => DroppedAgentFiller::Noop,
                    FillerName::LastKnown => DroppedAgentFiller::LastKnown,
                },
            },
            settings: EngineSettings {
                budget: self.budget,
                budget_per_agent: self.budget_per_agent,
                reset_buffers_on_execute: self.reset_buffers_on_execute,
            },
            episode_steps: self.episode_steps,
        }
    }

    /// Stable identifier: the first 16 hex digits of the SHA-256 of the
    /// canonical JSON form, with `repetitions` left out so that adding runs
    /// keeps the id.
    pub fn config_id(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut value {
            map.remove("repetitions");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Parses a config file and expands its grid.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(mut base) = value else {
        return Err(HarnessError::Format(
            "config file must hold a JSON object".into(),
        ));
    };
    let grid: BTreeMap<String, Vec<Value>> = match base.remove("grid") {
        Some(g) => serde_json::from_value(g)?,
        None => BTreeMap::new(),
    };
    if let Some((key, _)) = grid.iter().find(|(_, values)| values.is_empty()) {
        return Err(HarnessError::Format(format!(
            "grid entry `{key}` has no values"
        )));
    }

    let mut points = vec![base];
    for (key, values) in &grid {
        let path: Vec<&str> = key.split('.').collect();
        points = points
            .into_iter()
            .flat_map(|point| {
                let path = &path;
                values.iter().map(move |v| {
                    let mut p = point.clone();
                    set_path(&mut p, path, v.clone());
                    p
                })
            })
            .collect::<Vec<_>>();
    }
    points
        .into_iter()
        .map(|p| serde_json::from_value(Value::Object(p)).map_err(HarnessError::from))
        .collect()
}

fn set_path(map: &mut Map<String, Value>, path: &[&str], value: Value) {
    let (head, rest) = path.split_first().expect("non-empty path");
    if rest.is_empty() {
        map.insert((*head).to_owned(), value);
        return;
    }
    let child = map
        .entry((*head).to_owned())
        .or_insert_with(|| Value::Object(Map::new()));
    if !child.is_object() {
        *child = Value::Object(Map::new());
    }
    if let Value::Object(inner) = child {
        set_path(inner, rest, value);
    }
}

/// Validates every expanded config; violations are prefixed with the grid index.
pub fn validate_all(configs: &[ExperimentConfig]) -> Result<(), ConfigError> {
    let mut report = ConfigError::default();
    if configs.is_empty() {
        report.push("config file expands to no experiments");
    }
    for (i, c) in configs.iter().enumerate() {
        if let Err(e) = c.validate() {
            for v in e.violations {
                report.push(format!("config {i}: {v}"));
            }
        }
    }
    report.into_result()
}
