//! Deterministic random streams.
//!
//! One master seed fans out into independent child streams keyed by
//! `(run, agent, purpose)`. A child stream depends only on its key, so adding
//! runs, agents or purposes never shifts an existing stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream in the crate.
pub type Stream = ChaCha8Rng;

/// Agent slot used for streams that belong to the environment rather than an agent.
pub const ENVIRONMENT: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Plan sampling, both for the agent's own iterations and for answering queries.
    Plan = 1,
    /// Communication drop decisions taken while the agent is focal.
    Communication = 2,
    /// Simulated transitions rolled out while the agent is focal.
    Simulation = 3,
    /// Transitions of the real environment.
    Execution = 4,
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a key path into a 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &k| {
        splitmix64(acc ^ splitmix64(k))
    })
}

/// Seed of a single episode within an experiment.
pub fn run_seed(master: u64, run: u64) -> u64 {
    derive_seed(master, &[run])
}

pub fn stream(run_seed: u64, agent: u64, purpose: Purpose) -> Stream {
    Stream::seed_from_u64(derive_seed(run_seed, &[agent, purpose as u64]))
}
