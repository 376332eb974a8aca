//! Open-loop policies: one bandit per planning depth.

use alloc::vec::Vec;

use rand::Rng;

use crate::bandit::{argmax, NormalGammaParams, RewardsToGoBuffer, Strategy};
use crate::error::PolicyError;

/// A sequence of action indices, one per planning depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    pub actions: Vec<usize>,
}

impl Plan {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions }
    }

    /// A plan that repeats `action` at every depth.
    pub fn repeat(action: usize, horizon: usize) -> Self {
        Self {
            actions: alloc::vec![action; horizon],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.actions.first().copied()
    }
}

/// Suffix sums: `out[i] = rewards[i] + rewards[i + 1] + ... + rewards[h - 1]`.
pub fn rewards_to_go(rewards: &[f64]) -> Result<Vec<f64>, PolicyError> {
    if rewards.is_empty() {
        return Err(PolicyError::EmptyRewards);
    }
    let mut out = rewards.to_vec();
    for i in (0..out.len() - 1).rev() {
        out[i] += out[i + 1];
    }
    Ok(out)
}

/// Distribution over plans of one agent, factorized over depths.
///
/// `buffers` holds one rewards-to-go window per (depth, action), stored
/// depth-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenLoopPolicy {
    horizon: usize,
    num_actions: usize,
    prior: NormalGammaParams,
    strategy: Strategy,
    buffers: Vec<RewardsToGoBuffer>,
}

impl OpenLoopPolicy {
    pub fn new(
        horizon: usize,
        num_actions: usize,
        window: usize,
        prior: NormalGammaParams,
        strategy: Strategy,
    ) -> Result<Self, PolicyError> {
        if horizon == 0 {
            return Err(PolicyError::Invalid("horizon must be at least 1"));
        }
        if num_actions == 0 {
            return Err(PolicyError::Invalid("action set is empty"));
        }
        if window == 0 {
            return Err(PolicyError::Invalid("window capacity must be at least 1"));
        }
        match strategy {
            Strategy::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                return Err(PolicyError::Invalid("epsilon must lie in [0, 1]"));
            }
            Strategy::Ucb { c } if !(c.is_finite() && c > 0.0) => {
                return Err(PolicyError::Invalid("UCB constant must be positive"));
            }
            _ => {}
        }
        Ok(Self {
            horizon,
            num_actions,
            prior,
            strategy,
            buffers: alloc::vec![RewardsToGoBuffer::new(window); horizon * num_actions],
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn prior(&self) -> &NormalGammaParams {
        &self.prior
    }

    /// All windows of depth `depth`, indexed by action.
    pub fn depth_buffers(&self, depth: usize) -> &[RewardsToGoBuffer] {
        let start = depth * self.num_actions;
        &self.buffers[start..start + self.num_actions]
    }

    pub fn buffer(&self, depth: usize, action: usize) -> &RewardsToGoBuffer {
        &self.buffers[depth * self.num_actions + action]
    }

    pub fn buffers(&self) -> &[RewardsToGoBuffer] {
        &self.buffers
    }

    pub fn clear_buffers(&mut self) {
        self.buffers.iter_mut().for_each(RewardsToGoBuffer::clear);
    }

    /// Selects one action per depth with the policy's strategy.
    pub fn sample_plan<R: Rng + ?Sized>(&self, rng: &mut R) -> Plan {
        let actions = (0..self.horizon)
            .map(|depth| {
                self.strategy
                    .select(self.depth_buffers(depth), &self.prior, rng)
                    // num_actions >= 1 is enforced on construction
                    .expect("non-empty action set")
            })
            .collect();
        Plan { actions }
    }

    /// Pushes `rewards_to_go[i]` into the window of `(i, plan[i])`.
    /// Uniform policies never learn, so this is a no-op for them.
    pub fn update(&mut self, plan: &Plan, rewards_to_go: &[f64]) -> Result<(), PolicyError> {
        if plan.len() != self.horizon || rewards_to_go.len() != self.horizon {
            return Err(PolicyError::LengthMismatch {
                plan: plan.len(),
                horizon: self.horizon,
                rewards: rewards_to_go.len(),
            });
        }
        if let Some(&action) = plan.actions.iter().find(|&&a| a >= self.num_actions) {
            return Err(PolicyError::ActionOutOfRange {
                action,
                num_actions: self.num_actions,
            });
        }
        if !self.strategy.learns() {
            return Ok(());
        }
        for (depth, (&action, &value)) in plan.actions.iter().zip(rewards_to_go).enumerate() {
            self.buffers[depth * self.num_actions + action].push(value);
        }
        Ok(())
    }

    /// Value estimate used to pick the executed plan: the posterior mean for
    /// Thompson sampling, the window mean for the maximum-likelihood baselines.
    pub fn value_estimate(&self, depth: usize, action: usize) -> f64 {
        let buf = self.buffer(depth, action);
        match self.strategy {
            Strategy::Thompson => self.prior.posterior(buf).mu0(),
            _ => buf.mean(),
        }
    }

    /// The mode of the policy: per depth, the action with the highest value
    /// estimate. Ties go to the lowest action index.
    pub fn best_plan(&self) -> Plan {
        let actions = (0..self.horizon)
            .map(|depth| {
                argmax((0..self.num_actions).map(|a| self.value_estimate(depth, a)))
                    .expect("non-empty action set")
            })
            .collect();
        Plan { actions }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::NormalGammaParams;
    use crate::stream::Stream;
    use rand::SeedableRng;

    fn policy(horizon: usize, actions: usize, strategy: Strategy) -> OpenLoopPolicy {
        OpenLoopPolicy::new(horizon, actions, 10, NormalGammaParams::default(), strategy).unwrap()
    }

    #[test]
    fn suffix_sums() {
        assert_eq!(rewards_to_go(&[1.0, 2.0, 3.0]).unwrap(), [6.0, 5.0, 3.0]);
        assert_eq!(rewards_to_go(&[0.0; 3]).unwrap(), [0.0; 3]);
        assert_eq!(rewards_to_go(&[-1.0, 5.0]).unwrap(), [4.0, 5.0]);
        assert_eq!(rewards_to_go(&[]), Err(PolicyError::EmptyRewards));
    }

    #[test]
    fn singleton_action_set() {
        let p = policy(3, 1, Strategy::Thompson);
        let mut rng = Stream::seed_from_u64(0);
        assert_eq!(p.sample_plan(&mut rng).actions, [0, 0, 0]);
    }

    #[test]
    fn invalid_construction() {
        let prior = NormalGammaParams::default();
        assert!(OpenLoopPolicy::new(0, 2, 10, prior, Strategy::Thompson).is_err());
        assert!(OpenLoopPolicy::new(2, 0, 10, prior, Strategy::Thompson).is_err());
        assert!(OpenLoopPolicy::new(2, 2, 0, prior, Strategy::Thompson).is_err());
        let eps = Strategy::EpsilonGreedy { epsilon: 1.5 };
        assert!(OpenLoopPolicy::new(2, 2, 10, prior, eps).is_err());
        assert!(OpenLoopPolicy::new(2, 2, 10, prior, Strategy::Ucb { c: 0.0 }).is_err());
    }

    #[test]
    fn single_depth_thompson_reduces_to_bandit() {
        let mut p = policy(1, 2, Strategy::Thompson);
        for _ in 0..3 {
            p.update(&Plan::new(alloc::vec![0]), &[100.0]).unwrap();
            p.update(&Plan::new(alloc::vec![1]), &[-100.0]).unwrap();
        }
        let mut rng = Stream::seed_from_u64(1);
        let wins = (0..1000)
            .filter(|_| p.sample_plan(&mut rng).actions[0] == 0)
            .count();
        assert!(wins >= 950, "{wins}");
    }

    #[test]
    fn sampling_is_seeded() {
        let mut p = policy(4, 3, Strategy::Thompson);
        p.update(&Plan::new(alloc::vec![0, 1, 2, 0]), &[4.0, 3.0, 2.0, 1.0])
            .unwrap();
        let a = p.sample_plan(&mut Stream::seed_from_u64(2));
        let b = p.sample_plan(&mut Stream::seed_from_u64(2));
        assert_eq!(a, b);
    }

    #[test]
    fn targeted_update() {
        let mut p = policy(2, 2, Strategy::Thompson);
        p.update(&Plan::new(alloc::vec![0, 1]), &[4.0, 1.0])
            .unwrap();
        assert!(p.buffer(0, 0).values().eq([4.0]));
        assert!(p.buffer(1, 1).values().eq([1.0]));
        assert!(p.buffer(0, 1).is_empty());
        assert!(p.buffer(1, 0).is_empty());
    }

    #[test]
    fn window_keeps_most_recent() {
        let mut p = policy(1, 1, Strategy::ucb());
        for v in 0..11 {
            p.update(&Plan::new(alloc::vec![0]), &[f64::from(v)])
                .unwrap();
        }
        assert!(p.buffer(0, 0).values().eq((1..11).map(f64::from)));
    }

    #[test]
    fn uniform_policy_never_updates() {
        let mut p = policy(2, 3, Strategy::Uniform);
        let before = p.clone();
        p.update(&Plan::new(alloc::vec![2, 1]), &[7.0, 3.0])
            .unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn update_checks_lengths() {
        let mut p = policy(2, 2, Strategy::Thompson);
        assert!(matches!(
            p.update(&Plan::new(alloc::vec![0]), &[1.0, 2.0]),
            Err(PolicyError::LengthMismatch { .. })
        ));
        assert!(matches!(
            p.update(&Plan::new(alloc::vec![0, 1]), &[1.0]),
            Err(PolicyError::LengthMismatch { .. })
        ));
        assert!(matches!(
            p.update(&Plan::new(alloc::vec![0, 5]), &[1.0, 2.0]),
            Err(PolicyError::ActionOutOfRange { .. })
        ));
    }

    #[test]
    fn best_plan_defaults_to_first_actions() {
        let p = policy(3, 4, Strategy::Thompson);
        assert_eq!(p.best_plan().actions, [0, 0, 0]);
    }

    #[test]
    fn best_plan_follows_posterior_mean() {
        let mut p = policy(2, 2, Strategy::Thompson);
        p.update(&Plan::new(alloc::vec![0, 1]), &[10.0, 1.0])
            .unwrap();
        p.update(&Plan::new(alloc::vec![1, 1]), &[0.0, 1.0])
            .unwrap();
        let best = p.best_plan();
        assert_eq!(best.actions[0], 0);
        assert_eq!(best, p.best_plan());
    }

    #[test]
    fn learned_plan_dominates_samples() {
        let mut p = policy(3, 4, Strategy::Thompson);
        let mut rng = Stream::seed_from_u64(3);
        for k in 0..200 {
            let other = 1 + k % 3;
            p.update(&Plan::repeat(0, 3), &[10.0; 3]).unwrap();
            p.update(&Plan::repeat(other, 3), &[-10.0; 3]).unwrap();
        }
        let hits = (0..1000)
            .filter(|_| p.sample_plan(&mut rng) == Plan::repeat(0, 3))
            .count();
        assert!(hits >= 900, "{hits}");
    }
}
