//! Distributed online open loop planning.
//!
//! Each agent keeps an open-loop policy: one multiarmed bandit per planning
//! depth. Agents repeatedly sample plans, ask peers for samples from their
//! current policies, simulate the joint plan through a generative model and
//! feed the observed rewards-to-go back into their bandits. Thompson sampling
//! over normal-gamma posteriors is the main selection strategy; epsilon-greedy,
//! UCB and uniform sampling are provided as baselines.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CLI and the
//! experiment grid live in the `doolp-harness` crate.

#![no_std]

extern crate alloc;

pub mod bandit;
pub mod engine;
pub mod error;
pub mod factory;
pub mod policy;
pub mod stream;

pub use bandit::{ArmStats, NormalGammaParams, RewardsToGoBuffer, Strategy};
pub use engine::{
    run_episode, AgentHandle, CoordinationConfig, DroppedAgentFiller, Engine, EngineSettings,
    EpisodeConfig, GenerativeModel, IterationOutcome, StepOutcome,
};
pub use error::{BanditError, ConfigError, EngineError, FactoryError, PolicyError};
pub use factory::{FactoryAction, FactoryModel, FactorySpec, FactoryState, Item, Machine};
pub use policy::{rewards_to_go, OpenLoopPolicy, Plan};
