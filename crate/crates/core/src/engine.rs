//! Planning and execution loops over a set of agents.
//!
//! Agents plan in a deterministic round-robin: planning iteration `k` of a
//! round is run by agent `k mod |agents|`, and every query is answered from
//! the other agents' live policies. Each agent owns three random streams
//! (plan sampling, communication drops, simulation) and the environment owns
//! one more, so changing one agent's strategy leaves every other stream alone.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::bandit::{NormalGammaParams, RewardsToGoBuffer, Strategy};
use crate::error::{ConfigError, EngineError};
use crate::factory::{FactoryModel, FactorySpec};
use crate::policy::{rewards_to_go, OpenLoopPolicy, Plan};
use crate::stream::{self, Purpose, Stream};

/// Simulator of the domain: samples a successor state and a shared reward
/// for a joint action.
pub trait GenerativeModel {
    type State: Clone;
    type Action: Clone;
    type Error: fmt::Display;

    fn initial_state(&self) -> Self::State;

    fn num_agents(&self) -> usize;

    /// Ordered actions available to `agent`; policies index into this list.
    fn action_set(&self, agent: usize) -> Vec<Self::Action>;

    /// Action standing in for agents that are absent from a simulated joint plan.
    fn noop(&self) -> Self::Action;

    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        joint_action: &[Self::Action],
        rng: &mut R,
    ) -> Result<(Self::State, f64), Self::Error>;
}

/// What a dropped peer contributes to a simulated joint plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DroppedAgentFiller {
    /// The domain's no-op at every depth.
    #[default]
    Noop,
    /// The last plan the focal agent received from that peer, or no-op if none.
    LastKnown,
}

/// Who gets queried. Every other agent is a candidate; each is dropped
/// independently with probability `drop_rate` in every planning iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinationConfig {
    pub drop_rate: f64,
    pub filler: DroppedAgentFiller,
}

impl Default for CoordinationConfig {
    fn default() -> Self {
        Self {
            drop_rate: 0.0,
            filler: DroppedAgentFiller::Noop,
        }
    }
}

impl CoordinationConfig {
    pub fn with_drop_rate(drop_rate: f64) -> Self {
        Self {
            drop_rate,
            ..Self::default()
        }
    }

    fn validate(&self, errors: &mut ConfigError) {
        if !(0.0..=1.0).contains(&self.drop_rate) {
            errors.push(format!(
                "drop_rate must lie in [0, 1], got {}",
                self.drop_rate
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineSettings {
    /// Simulations per execution step.
    pub budget: usize,
    /// Interpret `budget` per agent instead of shared by all agents.
    pub budget_per_agent: bool,
    /// Clear every rewards-to-go window after each executed action.
    pub reset_buffers_on_execute: bool,
}

impl Default for EngineSettings {
    /// 64 simulations per agent, windows cleared after every executed action.
    fn default() -> Self {
        Self {
            budget: 64,
            budget_per_agent: true,
            reset_buffers_on_execute: true,
        }
    }
}

impl EngineSettings {
    /// `budget` simulations shared by all agents, windows kept across steps.
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            budget_per_agent: false,
            reset_buffers_on_execute: false,
        }
    }

    /// Planning iterations per round for `num_agents` agents.
    pub fn iterations(&self, num_agents: usize) -> usize {
        if self.budget_per_agent {
            self.budget * num_agents
        } else {
            self.budget
        }
    }
}

/// One planning agent.
#[derive(Debug, Clone)]
pub struct AgentHandle<A> {
    pub id: usize,
    pub policy: OpenLoopPolicy,
    pub action_set: Vec<A>,
    plan_rng: Stream,
    comm_rng: Stream,
    sim_rng: Stream,
    /// Best simulated (own plan, joint value) of the current round; tracked
    /// for non-learning policies only.
    best: Option<(Plan, f64)>,
    last_known: Vec<Option<Plan>>,
}

impl<A> AgentHandle<A> {
    pub fn new(
        id: usize,
        policy: OpenLoopPolicy,
        action_set: Vec<A>,
        num_agents: usize,
        run_seed: u64,
    ) -> Self {
        let agent = id as u64;
        Self {
            id,
            policy,
            action_set,
            plan_rng: stream::stream(run_seed, agent, Purpose::Plan),
            comm_rng: stream::stream(run_seed, agent, Purpose::Communication),
            sim_rng: stream::stream(run_seed, agent, Purpose::Simulation),
            best: None,
            last_known: alloc::vec![None; num_agents],
        }
    }

    /// Answers a plan query with a fresh sample from the current policy.
    pub fn sample_plan(&mut self) -> Plan {
        self.policy.sample_plan(&mut self.plan_rng)
    }

    pub fn best_simulated(&self) -> Option<&(Plan, f64)> {
        self.best.as_ref()
    }

    /// The plan this agent would execute now.
    pub fn chosen_plan(&mut self) -> Plan {
        if self.policy.strategy().learns() {
            return self.policy.best_plan();
        }
        match &self.best {
            Some((plan, _)) => plan.clone(),
            // never focal this round: nothing simulated, guess
            None => self.sample_plan(),
        }
    }
}

/// Result of one simulated joint plan.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    pub focal: usize,
    /// Sum of the simulated rewards over the horizon.
    pub cumulative_reward: f64,
    /// Peers that answered a query (the focal agent not included).
    pub queried: usize,
    /// Whether each agent contributed a real plan to the simulation.
    pub participants: Vec<bool>,
}

/// One planning iteration of `focal`: sample an own plan, query the
/// surviving peers, simulate the joint plan and update the focal policy.
pub fn plan_iteration<M: GenerativeModel>(
    agents: &mut [AgentHandle<M::Action>],
    focal: usize,
    state: &M::State,
    model: &M,
    coordination: &CoordinationConfig,
) -> Result<IterationOutcome, EngineError> {
    let n = agents.len();
    let horizon = agents[focal].policy.horizon();
    let own = agents[focal].sample_plan();

    let mut plans: Vec<Option<Plan>> = alloc::vec![None; n];
    let mut participants = alloc::vec![false; n];
    let mut queried = 0;
    for peer in (0..n).filter(|&j| j != focal) {
        let dropped = agents[focal].comm_rng.random::<f64>() < coordination.drop_rate;
        if dropped {
            if coordination.filler == DroppedAgentFiller::LastKnown {
                plans[peer] = agents[focal].last_known[peer].clone();
            }
            continue;
        }
        let answer = agents[peer].sample_plan();
        agents[focal].last_known[peer] = Some(answer.clone());
        plans[peer] = Some(answer);
        participants[peer] = true;
        queried += 1;
    }
    plans[focal] = Some(own.clone());
    participants[focal] = true;

    let mut sim_state = state.clone();
    let mut rewards = Vec::with_capacity(horizon);
    for depth in 0..horizon {
        let joint: Vec<M::Action> = plans
            .iter()
            .zip(agents.iter())
            .map(|(plan, agent)| match plan {
                Some(p) => agent.action_set[p.actions[depth]].clone(),
                None => model.noop(),
            })
            .collect();
        let (next, reward) = model
            .step(&sim_state, &joint, &mut agents[focal].sim_rng)
            .map_err(|e| EngineError::Simulation {
                agent: agents[focal].id,
                depth,
                message: e.to_string(),
            })?;
        sim_state = next;
        rewards.push(reward);
    }

    let to_go = rewards_to_go(&rewards)?;
    let cumulative_reward = to_go[0];
    let agent = &mut agents[focal];
    agent.policy.update(&own, &to_go)?;
    if !agent.policy.strategy().learns()
        && agent
            .best
            .as_ref()
            .is_none_or(|(_, v)| cumulative_reward > *v)
    {
        agent.best = Some((own, cumulative_reward));
    }

    Ok(IterationOutcome {
        focal,
        cumulative_reward,
        queried,
        participants,
    })
}

/// Runs the planning iterations of one execution step, round-robin over agents.
pub fn planning_round<M: GenerativeModel>(
    agents: &mut [AgentHandle<M::Action>],
    state: &M::State,
    model: &M,
    coordination: &CoordinationConfig,
    iterations: usize,
) -> Result<Vec<IterationOutcome>, EngineError> {
    for agent in agents.iter_mut() {
        agent.best = None;
    }
    let n = agents.len();
    (0..iterations)
        .map(|k| plan_iteration(agents, k % n, state, model, coordination))
        .collect()
}

/// Result of executing one joint action in the real environment.
#[derive(Debug, Clone)]
pub struct StepOutcome<S, A> {
    pub next_state: S,
    pub joint_action: Vec<A>,
    pub reward: f64,
}

/// Plans from `state` with `model_sim`, then executes the first action of
/// every agent's chosen plan on `model_real`.
#[allow(clippy::too_many_arguments)]
pub fn execution_step<M: GenerativeModel, R: Rng + ?Sized>(
    agents: &mut [AgentHandle<M::Action>],
    state: &M::State,
    model_sim: &M,
    model_real: &M,
    coordination: &CoordinationConfig,
    settings: &EngineSettings,
    real_rng: &mut R,
) -> Result<StepOutcome<M::State, M::Action>, EngineError> {
    if settings.budget == 0 {
        let mut errors = ConfigError::default();
        errors.push("budget must be at least 1");
        return Err(errors.into());
    }
    planning_round(
        agents,
        state,
        model_sim,
        coordination,
        settings.iterations(agents.len()),
    )?;

    let joint_action: Vec<M::Action> = agents
        .iter_mut()
        .map(|agent| {
            let first = agent.chosen_plan().first().expect("horizon >= 1");
            agent.action_set[first].clone()
        })
        .collect();
    let (next_state, reward) = model_real
        .step(state, &joint_action, real_rng)
        .map_err(|e| EngineError::Execution(e.to_string()))?;

    if settings.reset_buffers_on_execute {
        for agent in agents.iter_mut() {
            agent.policy.clear_buffers();
        }
    }
    Ok(StepOutcome {
        next_state,
        joint_action,
        reward,
    })
}

/// A model together with its agents and the real environment state.
pub struct Engine<M: GenerativeModel> {
    model: M,
    agents: Vec<AgentHandle<M::Action>>,
    coordination: CoordinationConfig,
    settings: EngineSettings,
    state: M::State,
    real_rng: Stream,
}

impl<M: GenerativeModel> Engine<M> {
    /// `policies[i]` belongs to agent `i` and must match its action set size
    /// and share the horizon of every other policy.
    pub fn new(
        model: M,
        policies: Vec<OpenLoopPolicy>,
        coordination: CoordinationConfig,
        settings: EngineSettings,
        run_seed: u64,
    ) -> Result<Self, ConfigError> {
        let mut errors = ConfigError::default();
        let n = model.num_agents();
        if n == 0 {
            errors.push("model has no agents");
        }
        if policies.len() != n {
            errors.push(format!("{} policies for {} agents", policies.len(), n));
        }
        if settings.budget == 0 {
            errors.push("budget must be at least 1");
        }
        coordination.validate(&mut errors);
        if let Some(first) = policies.first() {
            if policies.iter().any(|p| p.horizon() != first.horizon()) {
                errors.push("all policies must share one horizon");
            }
        }
        for (i, p) in policies.iter().enumerate().take(n) {
            let actions = model.action_set(i).len();
            if p.num_actions() != actions {
                errors.push(format!(
                    "agent {i}: policy has {} actions, model offers {actions}",
                    p.num_actions()
                ));
            }
        }
        errors.into_result()?;

        let agents = policies
            .into_iter()
            .enumerate()
            .map(|(i, policy)| AgentHandle::new(i, policy, model.action_set(i), n, run_seed))
            .collect();
        Ok(Self {
            state: model.initial_state(),
            model,
            agents,
            coordination,
            settings,
            real_rng: stream::stream(run_seed, stream::ENVIRONMENT, Purpose::Execution),
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn agents(&self) -> &[AgentHandle<M::Action>] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [AgentHandle<M::Action>] {
        &mut self.agents
    }

    pub fn state(&self) -> &M::State {
        &self.state
    }

    pub fn coordination(&self) -> &CoordinationConfig {
        &self.coordination
    }

    pub fn plan_iteration(&mut self, focal: usize) -> Result<IterationOutcome, EngineError> {
        plan_iteration(
            &mut self.agents,
            focal,
            &self.state,
            &self.model,
            &self.coordination,
        )
    }

    pub fn planning_round(&mut self) -> Result<Vec<IterationOutcome>, EngineError> {
        let iterations = self.settings.iterations(self.agents.len());
        planning_round(
            &mut self.agents,
            &self.state,
            &self.model,
            &self.coordination,
            iterations,
        )
    }

    /// Plans, executes one joint action and advances the real state.
    pub fn execution_step(&mut self) -> Result<StepOutcome<M::State, M::Action>, EngineError> {
        let outcome = execution_step(
            &mut self.agents,
            &self.state,
            &self.model,
            &self.model,
            &self.coordination,
            &self.settings,
            &mut self.real_rng,
        )?;
        self.state = outcome.next_state.clone();
        Ok(outcome)
    }

    /// Realized rewards of `steps` execution steps.
    pub fn run(&mut self, steps: usize) -> Result<Vec<f64>, EngineError> {
        (0..steps)
            .map(|_| self.execution_step().map(|o| o.reward))
            .collect()
    }
}

/// Everything needed to build and run one factory episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub factory: FactorySpec,
    pub strategy: Strategy,
    pub horizon: usize,
    pub window: usize,
    pub prior: NormalGammaParams,
    pub coordination: CoordinationConfig,
    pub settings: EngineSettings,
    pub episode_steps: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            factory: FactorySpec::paper_default(),
            strategy: Strategy::Thompson,
            horizon: 4,
            window: RewardsToGoBuffer::DEFAULT_CAPACITY,
            prior: NormalGammaParams::default(),
            coordination: CoordinationConfig::default(),
            settings: EngineSettings::default(),
            episode_steps: 50,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = self.factory.validate().err().unwrap_or_default();
        if self.horizon == 0 {
            errors.push("horizon must be at least 1");
        }
        if self.window == 0 {
            errors.push("window_capacity must be at least 1");
        }
        if self.settings.budget == 0 {
            errors.push("budget must be at least 1");
        }
        match self.strategy {
            Strategy::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                errors.push(format!("epsilon must lie in [0, 1], got {epsilon}"));
            }
            Strategy::Ucb { c } if !(c.is_finite() && c > 0.0) => {
                errors.push(format!("ucb_c must be positive, got {c}"));
            }
            _ => {}
        }
        self.coordination.validate(&mut errors);
        errors.into_result()
    }

    pub fn build(&self, run_seed: u64) -> Result<Engine<FactoryModel>, EngineError> {
        self.validate()?;
        let model = FactoryModel::new(self.factory.clone())?;
        let policies = (0..model.num_agents())
            .map(|i| {
                OpenLoopPolicy::new(
                    self.horizon,
                    model.action_set(i).len(),
                    self.window,
                    self.prior,
                    self.strategy,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Engine::new(
            model,
            policies,
            self.coordination,
            self.settings,
            run_seed,
        )?)
    }
}

/// Realized per-step rewards of one factory episode.
pub fn run_episode(config: &EpisodeConfig, run_seed: u64) -> Result<Vec<f64>, EngineError> {
    config.build(run_seed)?.run(config.episode_steps)
}
