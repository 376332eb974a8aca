//! Per-depth arm value estimation and arm selection.
//!
//! Arm values are observed rewards-to-go kept in small sliding windows. The
//! Bayesian strategy places a normal-gamma prior over the mean and precision
//! of each arm's value and recomputes the posterior from the current window
//! every time it is needed; the window evicts old samples, so sequential
//! conjugate updating would not match.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::BanditError;

/// Normal-gamma parameters `(mu0, lambda0, alpha0, beta0)` of an arm value belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalGammaParams {
    mu0: f64,
    lambda0: f64,
    alpha0: f64,
    beta0: f64,
}

impl Default for NormalGammaParams {
    /// `(0, 1, 1, 100)`: zero mean, one pseudo-observation for the mean and a
    /// wide prior variance.
    fn default() -> Self {
        Self {
            mu0: 0.0,
            lambda0: 1.0,
            alpha0: 1.0,
            beta0: 100.0,
        }
    }
}

impl NormalGammaParams {
    /// Returns `None` unless `lambda0`, `alpha0` and `beta0` are finite and
    /// strictly positive and `mu0` is finite.
    pub fn new(mu0: f64, lambda0: f64, alpha0: f64, beta0: f64) -> Option<Self> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if mu0.is_finite() && positive(lambda0) && positive(alpha0) && positive(beta0) {
            Some(Self {
                mu0,
                lambda0,
                alpha0,
                beta0,
            })
        } else {
            None
        }
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// Conjugate update with the observations currently held in `observations`.
    pub fn posterior(&self, observations: &RewardsToGoBuffer) -> Self {
        self.posterior_from(
            observations.len(),
            observations.mean(),
            observations.sum_sq_dev(),
        )
    }

    /// Conjugate update from sufficient statistics: count, mean and the sum of
    /// squared deviations from the mean (`n * s` with `s` the population variance).
    fn posterior_from(&self, n: usize, mean: f64, sum_sq_dev: f64) -> Self {
        if n == 0 {
            return *self;
        }
        let n = n as f64;
        let lambda = self.lambda0 + n;
        let dev = mean - self.mu0;
        Self {
            mu0: (self.lambda0 * self.mu0 + n * mean) / lambda,
            lambda0: lambda,
            alpha0: self.alpha0 + n / 2.0,
            beta0: self.beta0 + 0.5 * (sum_sq_dev + self.lambda0 * n * dev * dev / lambda),
        }
    }

    /// Draws `(mu, tau)`: `tau ~ Gamma(shape alpha0, rate beta0)`, then
    /// `mu ~ Normal(mu0, 1 / (lambda0 * tau))`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        // Parameters are validated on construction, so both constructors succeed.
        let gamma = Gamma::new(self.alpha0, 1.0 / self.beta0).expect("valid gamma parameters");
        let mut tau: f64 = gamma.sample(rng);
        if tau <= 0.0 {
            tau = f64::MIN_POSITIVE;
        }
        let sd = 1.0 / libm::sqrt(self.lambda0 * tau);
        let mu = if sd.is_finite() {
            Normal::new(self.mu0, sd)
                .expect("valid normal parameters")
                .sample(rng)
        } else {
            self.mu0
        };
        (mu, tau)
    }
}

/// Free-function form of [`NormalGammaParams::posterior`].
pub fn posterior(prior: &NormalGammaParams, observations: &RewardsToGoBuffer) -> NormalGammaParams {
    prior.posterior(observations)
}

/// Free-function form of [`NormalGammaParams::sample`].
pub fn sample_normal_gamma<R: Rng + ?Sized>(params: &NormalGammaParams, rng: &mut R) -> (f64, f64) {
    params.sample(rng)
}

/// Sliding window of observed rewards-to-go for one (depth, action) pair.
/// The most recent value is last; pushing into a full window evicts the oldest.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardsToGoBuffer {
    capacity: usize,
    values: VecDeque<f64>,
}

impl RewardsToGoBuffer {
    pub const DEFAULT_CAPACITY: usize = 10;

    /// # Panics
    ///
    /// Panics if `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            values: VecDeque::with_capacity(capacity),
        }
    }

    pub fn from_values(capacity: usize, values: impl IntoIterator<Item = f64>) -> Self {
        let mut buf = Self::new(capacity);
        buf.extend(values);
        buf
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn push(&mut self, value: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(value);
    }

    pub fn extend(&mut self, values: impl IntoIterator<Item = f64>) {
        for v in values {
            self.push(v);
        }
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    /// Window mean; `0.0` for an empty window.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance (divisor `n`); `0.0` for an empty window.
    pub fn variance(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.sum_sq_dev() / self.values.len() as f64
    }

    fn sum_sq_dev(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|x| (x - mean) * (x - mean)).sum()
    }
}

/// Pull counts and running mean of one arm, as used by UCB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmStats {
    /// Samples of this arm (`n_a`).
    pub pulls: u64,
    /// Samples of the whole bandit (`n`).
    pub total_pulls: u64,
    pub mean: f64,
}

impl ArmStats {
    /// Statistics of every arm of one bandit, taken over the current windows.
    pub fn from_buffers(buffers: &[RewardsToGoBuffer]) -> Vec<ArmStats> {
        let total = buffers.iter().map(|b| b.len() as u64).sum();
        buffers
            .iter()
            .map(|b| ArmStats {
                pulls: b.len() as u64,
                total_pulls: total,
                mean: b.mean(),
            })
            .collect()
    }

    /// `mean + c * sqrt(2 ln n / n_a)`; unpulled arms score `+inf`.
    pub fn ucb_score(&self, c: f64) -> f64 {
        if self.pulls == 0 {
            return f64::INFINITY;
        }
        let n = self.total_pulls.max(1) as f64;
        self.mean + c * libm::sqrt(2.0 * libm::log(n) / self.pulls as f64)
    }
}

/// Arm selection rule applied independently at every planning depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Thompson sampling over normal-gamma posteriors.
    Thompson,
    EpsilonGreedy {
        epsilon: f64,
    },
    Ucb {
        c: f64,
    },
    /// Uniform plan sampling without policy updates (vanilla Monte Carlo).
    Uniform,
}

impl Strategy {
    pub const DEFAULT_EPSILON: f64 = 0.1;
    pub const DEFAULT_UCB_C: f64 = 1.0;

    pub fn epsilon_greedy() -> Self {
        Strategy::EpsilonGreedy {
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn ucb() -> Self {
        Strategy::Ucb {
            c: Self::DEFAULT_UCB_C,
        }
    }

    /// Whether observed rewards feed back into the policy.
    pub fn learns(&self) -> bool {
        !matches!(self, Strategy::Uniform)
    }

    pub fn select<R: Rng + ?Sized>(
        &self,
        buffers: &[RewardsToGoBuffer],
        prior: &NormalGammaParams,
        rng: &mut R,
    ) -> Result<usize, BanditError> {
        match *self {
            Strategy::Thompson => select_thompson(buffers, prior, rng),
            Strategy::EpsilonGreedy { epsilon } => select_epsilon_greedy(buffers, epsilon, rng),
            Strategy::Ucb { c } => select_ucb(&ArmStats::from_buffers(buffers), c),
            Strategy::Uniform => select_uniform(buffers.len(), rng),
        }
    }
}

/// Index of the first maximum; `None` for an empty iterator.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v.partial_cmp(&b) != Some(core::cmp::Ordering::Greater) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Samples `(mu, tau)` from every arm's posterior and plays the largest `mu`.
pub fn select_thompson<R: Rng + ?Sized>(
    buffers: &[RewardsToGoBuffer],
    prior: &NormalGammaParams,
    rng: &mut R,
) -> Result<usize, BanditError> {
    // Sampling is sequential so the stream consumption is fixed per arm.
    let mut sampled = Vec::with_capacity(buffers.len());
    for buf in buffers {
        sampled.push(prior.posterior(buf).sample(rng).0);
    }
    argmax(sampled).ok_or(BanditError::NoArms)
}

pub fn select_ucb(stats: &[ArmStats], c: f64) -> Result<usize, BanditError> {
    argmax(stats.iter().map(|s| s.ucb_score(c))).ok_or(BanditError::NoArms)
}

/// Greedy on window means (empty windows count as `0`) with probability
/// `1 - epsilon`, uniform otherwise.
pub fn select_epsilon_greedy<R: Rng + ?Sized>(
    buffers: &[RewardsToGoBuffer],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, BanditError> {
    if buffers.is_empty() {
        return Err(BanditError::NoArms);
    }
    let explore: f64 = rng.random();
    if explore < epsilon {
        select_uniform(buffers.len(), rng)
    } else {
        argmax(buffers.iter().map(RewardsToGoBuffer::mean)).ok_or(BanditError::NoArms)
    }
}

pub fn select_uniform<R: Rng + ?Sized>(num_arms: usize, rng: &mut R) -> Result<usize, BanditError> {
    if num_arms == 0 {
        return Err(BanditError::NoArms);
    }
    Ok(rng.random_range(0..num_arms))
}
