use doolp_core::factory::{FactoryAction, FactoryModel, FactorySpec, FactoryState};
use doolp_core::{
    run_episode, CoordinationConfig, Engine, EngineSettings, EpisodeConfig, GenerativeModel,
    NormalGammaParams, OpenLoopPolicy, Strategy,
};
use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn engine(
    spec: FactorySpec,
    strategies: &[Strategy],
    coordination: CoordinationConfig,
    seed: u64,
) -> Engine<FactoryModel> {
    let model = FactoryModel::new(spec).unwrap();
    let policies = strategies
        .iter()
        .map(|&s| {
            OpenLoopPolicy::new(
                3,
                model.item_actions().len(),
                10,
                NormalGammaParams::default(),
                s,
            )
            .unwrap()
        })
        .collect();
    Engine::new(
        model,
        policies,
        coordination,
        EngineSettings::default(),
        seed,
    )
    .unwrap()
}

fn desk(strategy: Strategy, drop_rate: f64, seed: u64) -> Engine<FactoryModel> {
    let spec = FactorySpec::desk_default();
    let n = spec.items.len();
    engine(
        spec,
        &vec![strategy; n],
        CoordinationConfig::with_drop_rate(drop_rate),
        seed,
    )
}

#[test]
fn drop_count_is_binomial() {
    let p = 0.3;
    let mut e = desk(Strategy::Thompson, p, 11);
    let n_agents = e.agents().len();
    let iterations = 10_000;
    let mut queried = 0;
    for k in 0..iterations {
        let out = e.plan_iteration(k % n_agents).unwrap();
        assert_eq!(
            out.participants.iter().filter(|&&x| x).count(),
            out.queried + 1
        );
        queried += out.queried;
    }
    let trials = (iterations * (n_agents - 1)) as f64;
    let mean = trials * (1.0 - p);
    let sd = (trials * p * (1.0 - p)).sqrt();
    assert!(
        (queried as f64 - mean).abs() <= 3.0 * sd,
        "{queried} vs {mean}±{sd}"
    );
}

#[test]
fn zero_drop_queries_everyone() {
    let mut e = desk(Strategy::Thompson, 0.0, 2);
    for k in 0..40 {
        let out = e.plan_iteration(k % 4).unwrap();
        assert_eq!(out.queried, 3);
    }
    let mut e = desk(Strategy::Thompson, 1.0, 2);
    for k in 0..40 {
        assert_eq!(e.plan_iteration(k % 4).unwrap().queried, 0);
    }
}

#[test]
fn vmc_plans_are_uniform_and_buffers_stay_empty() {
    let mut e = desk(Strategy::Uniform, 0.0, 5);
    let outcomes = e.planning_round().unwrap();
    assert!(!outcomes.is_empty());
    for agent in e.agents() {
        assert!(agent.policy.buffers().iter().all(|b| b.is_empty()));
    }

    // 3 actions over 3 depths: 27 plans
    let agent = &mut e.agents_mut()[0];
    let draws = 27_000;
    let mut counts = [0usize; 27];
    for _ in 0..draws {
        let plan = agent.sample_plan();
        counts[plan.actions.iter().fold(0, |acc, &a| acc * 3 + a)] += 1;
    }
    let expected = draws as f64 / 27.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(26.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn vmc_executes_its_best_simulated_plan() {
    let mut e = desk(Strategy::Uniform, 0.0, 9);
    let outcomes = e.planning_round().unwrap();
    for (i, agent) in e.agents().iter().enumerate() {
        let best = outcomes
            .iter()
            .filter(|o| o.focal == i)
            .map(|o| o.cumulative_reward)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(agent.best_simulated().unwrap().1, best);
    }
}

#[test]
fn planning_leaves_the_real_state_alone() {
    let mut e = desk(Strategy::Thompson, 0.25, 3);
    e.run(3).unwrap();
    let before = e.state().clone();
    for k in 0..50 {
        e.plan_iteration(k % 4).unwrap();
    }
    e.planning_round().unwrap();
    assert_eq!(e.state(), &before);
}

/// Each item enqueues on the machine of its next task; one processing type per machine.
fn oracle(state: &FactoryState) -> Vec<FactoryAction> {
    state
        .items
        .iter()
        .map(|item| match item.remaining_tasks.front() {
            Some(&t) if item.is_free() => FactoryAction::Enqueue(t),
            _ => FactoryAction::Wait,
        })
        .collect()
}

#[test]
fn oracle_completes_reliable_factory() {
    let machines = FactorySpec::uniform_machines(&[0.0, 0.0]);
    let spec = FactorySpec::new(machines, vec![vec![0, 1], vec![1, 0]]);
    let model = FactoryModel::new(spec).unwrap();
    let mut rng = doolp_core::stream::Stream::seed_from_u64(0);
    let mut state = model.initial();
    let total_tasks = state.remaining_tasks();
    let mut reward = 0.0;
    for _ in 0..total_tasks {
        let (next, r) = model.step(&state, &oracle(&state), &mut rng).unwrap();
        state = next;
        reward += r;
    }
    assert_eq!(state.completed_items(), 2);
    // 4 tasks at 10, 2 completions at 20, 4 unit-cost attempts
    assert_eq!(reward, 4.0 * 10.0 + 2.0 * 20.0 - 4.0);
}

#[test]
fn dots_completes_reliable_factory() {
    let machines = FactorySpec::uniform_machines(&[0.0, 0.0]);
    let spec = FactorySpec::new(machines, vec![vec![0, 1], vec![1, 0]]);
    for seed in 0..10 {
        let mut e = engine(
            spec.clone(),
            &[Strategy::Thompson; 2],
            CoordinationConfig::default(),
            seed,
        );
        e.run(8).unwrap();
        assert_eq!(e.state().completed_items(), 2, "seed {seed}");
    }
}

#[test]
fn episodes_are_reproducible() {
    for strategy in [
        Strategy::Thompson,
        Strategy::epsilon_greedy(),
        Strategy::ucb(),
        Strategy::Uniform,
    ] {
        let config = EpisodeConfig {
            factory: FactorySpec::desk_default(),
            strategy,
            horizon: 3,
            coordination: CoordinationConfig::with_drop_rate(0.5),
            ..EpisodeConfig::default()
        };
        let a = run_episode(&config, 42).unwrap();
        let b = run_episode(&config, 42).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a, b);
        assert_ne!(a, run_episode(&config, 43).unwrap());
    }
}

#[test]
fn agent_streams_do_not_depend_on_peers() {
    let spec = FactorySpec::desk_default();
    let mut all_dots = engine(
        spec.clone(),
        &[Strategy::Thompson; 4],
        CoordinationConfig::default(),
        8,
    );
    let mut mixed = engine(
        spec,
        &[
            Strategy::Thompson,
            Strategy::Uniform,
            Strategy::ucb(),
            Strategy::epsilon_greedy(),
        ],
        CoordinationConfig::default(),
        8,
    );
    for _ in 0..20 {
        assert_eq!(
            all_dots.agents_mut()[0].sample_plan(),
            mixed.agents_mut()[0].sample_plan()
        );
    }
}

#[test]
fn rejects_bad_setups() {
    let model = FactoryModel::new(FactorySpec::desk_default()).unwrap();
    let policy =
        OpenLoopPolicy::new(3, 3, 10, NormalGammaParams::default(), Strategy::Thompson).unwrap();
    let err = Engine::new(
        model,
        vec![policy; 2],
        CoordinationConfig::with_drop_rate(1.5),
        EngineSettings::with_budget(0),
        0,
    )
    .err()
    .unwrap();
    assert_eq!(err.violations.len(), 3, "{err}");
}
