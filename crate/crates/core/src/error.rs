use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BanditError {
    #[error("no arms")]
    NoArms,
    #[error("arm count mismatch: expected {expected}, got {actual}")]
    ArmCountMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("rewards sequence is empty")]
    EmptyRewards,
    #[error(
        "length mismatch: plan has {plan} actions, horizon is {horizon}, got {rewards} rewards"
    )]
    LengthMismatch {
        plan: usize,
        horizon: usize,
        rewards: usize,
    },
    #[error("action index {action} out of range for {num_actions} actions")]
    ActionOutOfRange { action: usize, num_actions: usize },
    #[error("invalid policy: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactoryError {
    #[error("joint action has {actual} entries, factory has {expected} items")]
    JointActionSize { expected: usize, actual: usize },
    #[error("item {item} asked to enqueue at unknown machine {machine}")]
    UnknownMachine { item: usize, machine: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("model step failed for agent {agent} at depth {depth}: {message}")]
    Simulation {
        agent: usize,
        depth: usize,
        message: String,
    },
    #[error("real environment step failed: {0}")]
    Execution(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Every violation found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl ConfigError {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, violation: impl Into<String>) {
        self.violations.push(violation.into());
    }

    pub fn into_result(self) -> Result<(), ConfigError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid configuration ({} violation",
            self.violations.len()
        )?;
        if self.violations.len() != 1 {
            f.write_str("s")?;
        }
        f.write_str(")")?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ConfigError {}
