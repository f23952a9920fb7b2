//! Banded empirical checks of stochastic order and of tail bounds.

use serde::{Deserialize, Serialize};

use crate::constants::optimized_tail_bound;
use crate::error::{Error, Result};
use crate::montecarlo::config::{ExperimentConfig, Measurement};
use crate::montecarlo::experiment::run_experiment;
use crate::montecarlo::samplers::product_passage;
use crate::montecarlo::{dkw_epsilon, stream_rng};

/// Result of checking `A ⪯ B` (`P{A ≥ r} ≤ P{B ≥ r}` for all `r`) from samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Every distinct pooled sample value, ascending.
    pub thresholds: Vec<f64>,
    /// `P̂{A ≥ r} - P̂{B ≥ r}` at each threshold.
    pub gaps: Vec<f64>,
    pub confidence: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    /// `eps_a + eps_b`.
    pub slack: f64,
    pub max_gap: f64,
    pub worst_threshold: f64,
    pub pass: bool,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Fraction of `sorted` that is `≥ r`.
fn upper_tail(sorted: &[f64], r: f64) -> f64 {
    (sorted.len() - sorted.partition_point(|&x| x < r)) as f64 / sorted.len() as f64
}

/// Scans every pooled value `r` and passes iff `P̂{A ≥ r} ≤ P̂{B ≥ r} + ε_a + ε_b`
/// with DKW half-widths at `confidence`.
pub fn dominance_test(a: &[f64], b: &[f64], confidence: f64) -> Result<DominanceReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyIdSet);
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let mut thresholds: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let gaps: Vec<f64> = thresholds
        .iter()
        .map(|&r| upper_tail(&sa, r) - upper_tail(&sb, r))
        .collect();
    let eps_a = dkw_epsilon(a.len(), confidence);
    let eps_b = dkw_epsilon(b.len(), confidence);
    let slack = eps_a + eps_b;
    let (worst, max_gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty pool");
    Ok(DominanceReport {
        worst_threshold: thresholds[worst],
        thresholds,
        gaps,
        confidence,
        eps_a,
        eps_b,
        slack,
        max_gap,
        pass: max_gap <= slack,
    })
}

/// One `t` of a tail comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: u32,
    /// `P̂{T ≥ t}` of the configured statistic.
    pub empirical: f64,
    /// `P̂{n B_1⋯B_t ≥ 1}`.
    pub product_tail: f64,
    /// 1, `n` or `n²`, matching the statistic's union bound.
    pub multiplier: f64,
    /// `min(1, multiplier · product_tail)`.
    pub union_bound: f64,
    /// `P̂{n B_1⋯B_{t-1} ≥ 1}`. `T ≥ t` exactly when `S_{t-1}` is nonempty,
    /// so this is the product with one factor per hop already taken.
    pub product_tail_prev: f64,
    /// `min(1, multiplier · inf_r (k!/∏(r+i))^t n^r)`.
    pub analytic: f64,
    /// DKW slack of the statistic plus the scaled slack of the product.
    pub slack: f64,
    pub product_slack: f64,
    /// `empirical ≤ union_bound + slack`.
    pub pass_union: bool,
    /// `empirical ≤ min(1, multiplier · product_tail_prev) + slack`.
    pub pass_prev: bool,
    /// `product_tail ≤ analytic + product_slack`, before scaling.
    pub pass_analytic: bool,
}

pub fn union_multiplier(measurement: Measurement, n: u64) -> f64 {
    match measurement {
        Measurement::TSupY => n as f64,
        Measurement::TSupXY => (n as f64).powi(2),
        _ => 1.0,
    }
}

/// Runs `cfg` and compares the tail of its routing time against `n B_1⋯B_t ≥ 1`
/// (as many product paths as trials) and against the optimized moment bound.
///
/// Product paths use streams `trials + 1 …` of the same master seed, disjoint
/// from the trial streams.
pub fn tail_comparison(cfg: &ExperimentConfig, t_values: &[u32]) -> Result<Vec<TailRow>> {
    if matches!(cfg.measurement, Measurement::SSizes | Measurement::TN) {
        return Err(Error::Config(vec![format!(
            "tail comparison needs a routing-time measurement, not {}",
            cfg.measurement
        )]));
    }
    let result = run_experiment(cfg)?;
    let k = result.k;
    let n = cfg.n as f64;
    let passages: Vec<f64> = (0..cfg.trials)
        .map(|i| {
            let mut rng = stream_rng(cfg.master_seed, cfg.trials + 1 + i);
            product_passage(n, k, &mut rng) as f64
        })
        .collect();
    let values = sorted(&result.values);
    let passages = sorted(&passages);
    let mult = union_multiplier(cfg.measurement, cfg.n);
    let eps = dkw_epsilon(values.len(), 0.99);
    let product_slack = dkw_epsilon(passages.len(), 0.99);
    Ok(t_values
        .iter()
        .map(|&t| {
            let empirical = upper_tail(&values, t as f64);
            // {n B_1⋯B_t ≥ 1} = {passage > t}
            let product_tail = upper_tail(&passages, t as f64 + 1.0);
            let union_bound = (mult * product_tail).min(1.0);
            let product_tail_prev = upper_tail(&passages, t.max(1) as f64);
            let raw = optimized_tail_bound(n, k, t).bound;
            let analytic = (mult * raw).min(1.0);
            let slack = eps + mult * product_slack;
            TailRow {
                t,
                empirical,
                product_tail,
                multiplier: mult,
                union_bound,
                product_tail_prev,
                analytic,
                slack,
                product_slack,
                pass_union: empirical <= union_bound + slack,
                pass_prev: empirical <= (mult * product_tail_prev).min(1.0) + slack,
                pass_analytic: product_tail <= raw + product_slack,
            }
        })
        .collect())
}
