//! Samplers, experiment drivers and statistical checks.
//!
//! Seeding: every trial owns a ChaCha8 stream. [`stream_rng`] keys the
//! generator with `master_seed` and selects stream `s`; trial `i` uses stream
//! `i + 1` and stream 0 is reserved for the fixed ID set of the deterministic
//! model. A trial's randomness therefore depends only on `(master_seed, i)`,
//! never on scheduling or worker count.

pub mod config;
pub mod dominance;
pub mod experiment;
pub mod ids;
pub mod oracle;
pub mod samplers;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{ConfigBuilder, ExperimentConfig, KRule, Measurement, Model};
pub use dominance::{dominance_test, tail_comparison, DominanceReport, TailRow};
pub use experiment::{run_experiment, ExperimentResult, ReferenceValues, Summary};
pub use ids::{generate_ids, IdSource};
pub use oracle::{brute_force_t_distribution, tv_distance};
pub use samplers::{sample_beta_min, sample_g1, sample_t_n, sample_w};

pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Generator of trial `trial`; stream `trial + 1`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    stream_rng(master_seed, trial + 1)
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: with probability at least
/// `confidence`, an empirical CDF of `n` samples stays within this of the truth.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    assert!(n > 0 && confidence > 0.0 && confidence < 1.0);
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}
