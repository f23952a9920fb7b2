//! Named verification suites and the experiments behind them.
//!
//! Each experiment is a plain function so the command line and the test
//! harness run exactly the same code. Seeds are fixed per experiment.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{
    beta_product_moment, constant, g1_cdf, g_of_k, harmonic, rate_h, ConstantKind,
};
use crate::error::Result;
use crate::idspace::{common_prefix_len, xor_distance, NodeId};
use crate::montecarlo::config::{ExperimentConfig, KRule, Measurement, Model};
use crate::montecarlo::dominance::{dominance_test, tail_comparison, DominanceReport, TailRow};
use crate::montecarlo::experiment::{run_experiment, ExperimentResult};
use crate::montecarlo::ids::{generate_ids, IdSource};
use crate::montecarlo::oracle::{brute_force_t_distribution, catalog, histogram, tv_distance};
use crate::montecarlo::samplers::{sample_beta_min, sample_g1, sample_t_n, sample_w};
use crate::montecarlo::{dkw_epsilon, stream_rng, trial_rng};
use crate::network::{simulate_routing_process, simulate_routing_time, Network};
use crate::trie::IdTrie;

/// Published constants for `k = 1..=10` as printed: `c_k`, `c_k′`, `c_k*`.
pub const PUBLISHED_CONSTANTS: [[&str; 3]; 10] = [
    ["1", "2.718281828", "3.591121477"],
    ["0.6666666667", "1.673805050", "2.170961287"],
    ["0.5454545455", "1.302556173", "1.668389781"],
    ["0.4800000000", "1.105969343", "1.403318015"],
    ["0.4379562044", "0.9817977138", "1.236481558"],
    ["0.4081632653", "0.8950813294", "1.120340102"],
    ["0.3856749311", "0.8304602569", "1.034040176"],
    ["0.3679369251", "0.7800681679", "0.9669189101"],
    ["0.3534857624", "0.7394331755", "0.9129238915"],
    ["0.3414171521", "0.7058123636", "0.8683482160"],
];

/// One unit in the last printed digit; an integer counts as printed to ten
/// significant digits.
pub fn printed_tolerance(printed: &str) -> f64 {
    match printed.split_once('.') {
        Some((_, frac)) => 10f64.powi(-(frac.len() as i32)),
        None => 10f64.powi(-(10 - printed.len() as i32)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Compares [`constant`] against every entry of [`PUBLISHED_CONSTANTS`].
pub fn published_table_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for (row, printed) in PUBLISHED_CONSTANTS.iter().enumerate() {
        let k = row + 1;
        for (kind, text) in ConstantKind::ALL.into_iter().zip(printed) {
            let want: f64 = text.parse().expect("table entry");
            let got = constant(k, kind);
            let tol = printed_tolerance(text);
            out.push(Check::new(
                format!("table k={k} {kind:?}"),
                (got - want).abs() <= tol,
                format!("computed {got:.12} printed {text} tolerance {tol:e}"),
            ));
        }
    }
    out
}

/// `c_k H_k = 1`, `c_k ≤ c_k′ ≤ c_k*` for `k ≤ 100`, and `h_1(e - 1) = e` with offset 1.
pub fn identity_checks() -> Vec<Check> {
    let mut worst = 0.0f64;
    let mut ordered = true;
    for k in 1..=100 {
        worst = worst.max((constant(k, ConstantKind::Pair) * harmonic(k) - 1.0).abs());
        let (a, b, c) = (
            constant(k, ConstantKind::Pair),
            constant(k, ConstantKind::SupTargets),
            constant(k, ConstantKind::SupPairs),
        );
        ordered &= a <= b && b <= c;
    }
    let e = std::f64::consts::E;
    let h = rate_h(1, ConstantKind::SupTargets, e - 1.0).expect("positive r");
    vec![
        Check::new(
            "c_k H_k = 1 for k ≤ 100",
            worst <= 1e-12,
            format!("max deviation {worst:e}"),
        ),
        Check::new("c_k ≤ c_k' ≤ c_k* for k ≤ 100", ordered, ""),
        Check::new(
            "h_1(e - 1) = e with offset 1",
            (h - e).abs() <= 1e-9,
            format!("{h:.15}"),
        ),
    ]
}

/// `constant(k, ·) · log k` at `k = 10⁴` lies in `[0.8, 1.25]` and is closer to 1 than at `k = 10²`.
pub fn large_k_trend_checks() -> Vec<Check> {
    ConstantKind::ALL
        .into_iter()
        .map(|kind| {
            let small = constant(100, kind) * 100f64.ln();
            let big = constant(10_000, kind) * 10_000f64.ln();
            let pass = (0.8..=1.25).contains(&big) && (big - 1.0).abs() < (small - 1.0).abs();
            Check::new(
                format!("{kind:?} · log k"),
                pass,
                format!("k=100: {small:.4}  k=10000: {big:.4}"),
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub k: usize,
    pub r: f64,
    pub t: u32,
    pub estimate: f64,
    pub std_error: f64,
    pub exact: f64,
    pub pass: bool,
}

/// Monte-Carlo `E[(B_1⋯B_t)^r]` over `paths` products against the closed form.
pub fn moment_check(k: usize, r: f64, t: u32, paths: usize, seed: u64) -> MomentCheck {
    let mut rng = stream_rng(seed, 1);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..paths {
        let v = sample_w(1.0, k, t, &mut rng).powf(r);
        sum += v;
        sum_sq += v * v;
    }
    let n = paths as f64;
    let estimate = sum / n;
    let var = (sum_sq / n - estimate * estimate) * n / (n - 1.0);
    let std_error = (var / n).sqrt();
    let exact = beta_product_moment(k, r, t);
    MomentCheck {
        k,
        r,
        t,
        estimate,
        std_error,
        exact,
        pass: (estimate - exact).abs() <= 3.0 * std_error,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G1Check {
    pub k: usize,
    pub samples: usize,
    pub max_cdf_gap: f64,
    pub dkw_band: f64,
    pub mean: f64,
    pub std_error: f64,
    pub expected_mean: f64,
}

/// Empirical law of `samples` draws of `G_1` against its CDF and mean.
pub fn g1_check(k: usize, samples: usize, seed: u64) -> G1Check {
    let mut rng = stream_rng(seed, 1);
    let draws: Vec<u32> = (0..samples).map(|_| sample_g1(k, &mut rng)).collect();
    let top = *draws.iter().max().expect("samples > 0");
    let mut counts = vec![0usize; top as usize + 1];
    for &g in &draws {
        counts[g as usize] += 1;
    }
    let mut cum = 0usize;
    let mut max_cdf_gap = 0.0f64;
    for (i, c) in counts.iter().enumerate() {
        cum += c;
        let emp = cum as f64 / samples as f64;
        max_cdf_gap = max_cdf_gap.max((emp - g1_cdf(k, i as u32)).abs());
    }
    let n = samples as f64;
    let mean = draws.iter().map(|&g| g as f64).sum::<f64>() / n;
    let var = draws
        .iter()
        .map(|&g| (g as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    G1Check {
        k,
        samples,
        max_cdf_gap,
        dkw_band: dkw_epsilon(samples, 0.99),
        mean,
        std_error: (var / n).sqrt(),
        expected_mean: crate::constants::expected_g1(k),
    }
}

/// `|S_t|` from routes on one random ID set against `W_t = |S_0| B_1⋯B_t`, for `t = 1..=t_max`.
///
/// The ID set is drawn from stream 0, the source is the leftmost leaf and the
/// target is all ones. Route `i` uses stream `i + 1`; the `W` path `i` uses
/// stream `trials + i + 1`.
pub fn pool_size_dominance(
    n: u64,
    d: usize,
    k: usize,
    t_max: usize,
    trials: u64,
    seed: u64,
    confidence: f64,
) -> Result<Vec<DominanceReport>> {
    let ids = generate_ids(&IdSource::Random, n, d, &mut stream_rng(seed, 0))?;
    let trie = IdTrie::build(ids)?;
    let x = trie.leaf(0);
    let y = NodeId::ones(d);
    let mut sizes = vec![Vec::with_capacity(trials as usize); t_max + 1];
    for i in 0..trials {
        let trace = simulate_routing_process(&trie, &x, &y, k, &mut trial_rng(seed, i))?;
        for (t, col) in sizes.iter_mut().enumerate() {
            col.push(trace.subtree_sizes.get(t).copied().unwrap_or(0) as f64);
        }
    }
    let s0 = sizes[0][0];
    let mut w = vec![Vec::with_capacity(trials as usize); t_max + 1];
    for i in 0..trials {
        let mut rng = stream_rng(seed, trials + i + 1);
        let mut cur = s0;
        for col in w.iter_mut().skip(1) {
            cur *= sample_beta_min(k, &mut rng);
            col.push(cur);
        }
    }
    (1..=t_max)
        .map(|t| dominance_test(&sizes[t], &w[t], confidence))
        .collect()
}

/// Tail comparison for `T_xy` on sequential IDs `0..n` with `x = 0` and `y` all ones.
pub fn fixed_pair_tails(n: u64, k: usize, trials: u64, seed: u64) -> Result<Vec<TailRow>> {
    let d = (64 - (n - 1).leading_zeros()) as usize;
    let cfg = ExperimentConfig {
        model: Model::Deterministic,
        id_source: IdSource::Sequential,
        n,
        d: d.max(1),
        k: KRule::Fixed(k),
        trials,
        master_seed: seed,
        measurement: Measurement::TFixedPair,
        ..ExperimentConfig::default()
    };
    tail_comparison(&cfg, &(0..=d as u32 + 2).collect::<Vec<_>>())
}

/// Random-model `T̄` (source to its polar opposite) for each `n`.
pub fn polar_sweep(ns: &[u64], k: usize, trials: u64, seed: u64) -> Result<Vec<ExperimentResult>> {
    ns.iter()
        .map(|&n| {
            run_experiment(&ExperimentConfig {
                model: Model::Random,
                id_source: IdSource::Random,
                n,
                d: 64,
                k: KRule::Fixed(k),
                trials,
                master_seed: seed,
                measurement: Measurement::TPolar,
                ..ExperimentConfig::default()
            })
        })
        .collect()
}

/// Mean of `walks` draws of `T_n`, divided by `log n`.
pub fn t_n_ratio(n: u64, k: usize, walks: u64, seed: u64) -> f64 {
    let total: u64 = (0..walks)
        .map(|i| u64::from(sample_t_n(n, k, &mut trial_rng(seed, i))))
        .sum();
    total as f64 / walks as f64 / (n as f64).ln()
}

/// Mean of `|T̄ - T_n| / log n` with the two sampled independently, per `n`.
pub fn polar_first_passage_gaps(ns: &[u64], k: usize, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let polar = polar_sweep(ns, k, trials, seed)?;
    Ok(ns
        .iter()
        .zip(&polar)
        .map(|(&n, res)| {
            let log_n = (n as f64).ln();
            let sum: f64 = res
                .values
                .iter()
                .enumerate()
                .map(|(i, &tbar)| {
                    let mut rng = stream_rng(seed ^ 0x5eed, i as u64 + 1);
                    (tbar - sample_t_n(n, k, &mut rng) as f64).abs()
                })
                .sum();
            sum / res.values.len() as f64 / log_n
        })
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoutingSuiteReport {
    pub instances: usize,
    pub routes: usize,
    pub failures: Vec<String>,
}

/// Random networks with `n ≤ 512` and mixed `d`, `k`. Every route must strictly
/// approach the target, end at the linear-scan closest node and take at most
/// `d` hops; every network must be strongly connected.
pub fn routing_suite(
    instances: usize,
    routes_per_instance: usize,
    seed: u64,
) -> Result<RoutingSuiteReport> {
    let mut report = RoutingSuiteReport::default();
    for inst in 0..instances {
        let mut rng = trial_rng(seed, inst as u64);
        let d = [9, 10, 12, 16, 24, 32, 64, 100, 160][rng.random_range(0..9)];
        let n = rng.random_range(1..=512u64);
        let k = [1, 2, 3, 4, 8, 20][rng.random_range(0..6)];
        let ids = generate_ids(&IdSource::Random, n, d, &mut rng)?;
        let net = Network::build(ids.iter().copied(), k, &mut rng)?;
        report.instances += 1;
        if !net.is_strongly_connected() {
            report.failures.push(format!(
                "instance {inst}: not strongly connected (n={n}, d={d}, k={k})"
            ));
        }
        for _ in 0..routes_per_instance {
            let x = ids[rng.random_range(0..ids.len())];
            let y = if rng.random::<bool>() {
                ids[rng.random_range(0..ids.len())]
            } else {
                NodeId::random(d, &mut rng)
            };
            let trace = net.route(&x, &y)?;
            report.routes += 1;
            let scan = ids
                .iter()
                .min_by_key(|v| xor_distance(v, &y).expect("same width").into_inner())
                .expect("nonempty");
            let dists: Vec<_> = trace
                .hops
                .iter()
                .map(|z| xor_distance(z, &y).expect("same width").into_inner())
                .collect();
            let mut problems = Vec::new();
            if dists.windows(2).any(|w| w[1] >= w[0]) {
                problems.push("distance not strictly decreasing");
            }
            if trace.hops.last() != Some(scan) {
                problems.push("does not end at the closest node");
            }
            if trace.routing_time() > d {
                problems.push("longer than d hops");
            }
            if trace.check().is_err() {
                problems.push("trace invariants");
            }
            if !problems.is_empty() {
                report.failures.push(format!(
                    "instance {inst} route {} -> {}: {}",
                    x.to_binary_string(),
                    y.to_binary_string(),
                    problems.join(", ")
                ));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub case: usize,
    pub k: usize,
    /// TV between the exact law and the recursion histogram.
    pub tv_exact_vs_process: f64,
    /// TV between routes on freshly built networks and the recursion histogram.
    pub tv_network_vs_process: f64,
}

/// Exact law vs `process_trials` recursion runs vs `network_builds` routes on
/// built networks, for every catalog case and `k ∈ {1, 2}`.
pub fn oracle_equivalence(
    process_trials: usize,
    network_builds: usize,
    seed: u64,
) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for (case_idx, case) in catalog().into_iter().enumerate() {
        let trie = IdTrie::build(case.ids.clone())?;
        for k in [1, 2] {
            let stream = (case_idx * 2 + k) as u64;
            let exact = brute_force_t_distribution(&case.ids, k, &case.x, &case.y)?;
            let mut rng = stream_rng(seed, stream);
            let process = histogram(
                (0..process_trials)
                    .map(|_| simulate_routing_time(&trie, &case.x, &case.y, k, &mut rng))
                    .collect::<Result<Vec<_>>>()?,
            );
            let mut rng = stream_rng(seed, 1000 + stream);
            let network = histogram(
                (0..network_builds)
                    .map(|_| {
                        Network::from_trie(trie.clone(), k, &mut rng)?
                            .routing_time(&case.x, &case.y)
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
            rows.push(OracleRow {
                case: case_idx,
                k,
                tv_exact_vs_process: tv_distance(&exact, &process),
                tv_network_vs_process: tv_distance(&network, &process),
            });
        }
    }
    Ok(rows)
}

/// `sup_{x,y} T_xy` over sampled pairs with `k = ⌈√n⌉`, random model.
pub fn sqrt_k_regime(n: u64, trials: u64, pairs: usize, seed: u64) -> Result<ExperimentResult> {
    run_experiment(&ExperimentConfig {
        model: Model::Random,
        id_source: IdSource::Random,
        n,
        d: 64,
        k: KRule::NPow(0.5),
        trials,
        master_seed: seed,
        measurement: Measurement::TSupXY,
        pair_samples: pairs,
        ..ExperimentConfig::default()
    })
}

fn metric_checks(budget: u64, seed: u64) -> Vec<Check> {
    let mut rng = stream_rng(seed, 1);
    let mut bad = 0u64;
    for _ in 0..budget {
        let d = rng.random_range(1..=256);
        let (x, y, z) = (
            NodeId::random(d, &mut rng),
            NodeId::random(d, &mut rng),
            NodeId::random(d, &mut rng),
        );
        let dist = |a: &NodeId, b: &NodeId| xor_distance(a, b).expect("same width").into_inner();
        let l = common_prefix_len(&x, &y).expect("same width");
        let dxy = dist(&x, &y);
        let lower = if l < d {
            num_bigint::BigUint::from(1u8) << (d - l - 1)
        } else {
            num_bigint::BigUint::ZERO
        };
        let upper = num_bigint::BigUint::from(1u8) << (d - l);
        let ok = dist(&x, &x) == num_bigint::BigUint::ZERO
            && dxy == dist(&y, &x)
            && dist(&x, &z) <= &dxy + dist(&y, &z)
            && dxy >= lower
            && dxy < upper;
        bad += u64::from(!ok);
    }
    vec![Check::new(
        "xor metric axioms and prefix bounds",
        bad == 0,
        format!("{budget} random triples, {bad} violations"),
    )]
}

fn trie_checks(budget: u64, seed: u64) -> Result<Vec<Check>> {
    let mut bad = 0u64;
    for i in 0..budget {
        let mut rng = trial_rng(seed, i);
        let d = rng.random_range(4..=40);
        let n = rng.random_range(1..=200u64).min(1 << d.min(20));
        let ids = generate_ids(&IdSource::Random, n, d, &mut rng)?;
        let trie = IdTrie::build(ids.iter().copied())?;
        let y = NodeId::random(d, &mut rng);
        let scan = ids
            .iter()
            .min_by_key(|v| xor_distance(v, &y).expect("same width").into_inner())
            .expect("nonempty");
        let ones = NodeId::ones(d);
        let rightmost = *ids.iter().max().expect("nonempty");
        let root = trie.root();
        let ok = trie.closest_to(&y)? == *scan
            && trie.rightmost_leaf(&root)? == rightmost
            && trie.closest_to(&ones)? == rightmost
            && root.size() == ids.len();
        bad += u64::from(!ok);
    }
    Ok(vec![Check::new(
        "closest leaf and rightmost leaf match linear scans",
        bad == 0,
        format!("{budget} random tries, {bad} mismatches"),
    )])
}

/// The suites `verify` can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Metric,
    Trie,
    Dominance,
    Tails,
    Constants,
    Convergence,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Metric,
        Suite::Trie,
        Suite::Dominance,
        Suite::Tails,
        Suite::Constants,
        Suite::Convergence,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Metric => "metric",
            Suite::Trie => "trie",
            Suite::Dominance => "dominance",
            Suite::Tails => "tails",
            Suite::Constants => "constants",
            Suite::Convergence => "convergence",
            Suite::Oracle => "oracle",
        }
    }

    /// Trials used when no budget is given.
    pub fn default_budget(self) -> u64 {
        match self {
            Suite::Metric | Suite::Trie => 1000,
            Suite::Dominance | Suite::Tails => 100_000,
            Suite::Constants => 0,
            Suite::Convergence => 2000,
            Suite::Oracle => 200_000,
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub format: String,
    pub version: String,
    pub suite: Suite,
    pub budget: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Runs `suite` with `budget` trials (its meaning depends on the suite).
pub fn run_suite(suite: Suite, budget: u64, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Metric => metric_checks(budget, seed),
        Suite::Trie => {
            let mut c = trie_checks(budget, seed)?;
            let r = routing_suite(budget as usize, 10, seed)?;
            c.push(Check::new(
                "routes strictly approach y*, end there within d hops; networks strongly connected",
                r.failures.is_empty(),
                match r.failures.first() {
                    Some(f) => format!("{} failures, first: {f}", r.failures.len()),
                    None => format!("{} instances, {} routes", r.instances, r.routes),
                },
            ));
            c
        }
        Suite::Constants => {
            let mut c = published_table_checks();
            c.extend(identity_checks());
            c
        }
        Suite::Dominance => pool_size_dominance(10_000, 20, 8, 5, budget, seed, 0.99)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                Check::new(
                    format!("|S_{}| ⪯ W_{}", i + 1, i + 1),
                    r.pass,
                    format!(
                        "max gap {:.5} at r = {} vs slack {:.5}",
                        r.max_gap, r.worst_threshold, r.slack
                    ),
                )
            })
            .collect(),
        Suite::Tails => {
            let rows = fixed_pair_tails(1024, 4, budget, seed)?;
            let worst = |f: &dyn Fn(&TailRow) -> f64| {
                rows.iter()
                    .map(|r| (r.t, f(r)))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("rows")
            };
            let (t1, g1) = worst(&|r| r.empirical - r.union_bound - r.slack);
            let (t2, g2) =
                worst(&|r| r.empirical - (r.multiplier * r.product_tail_prev).min(1.0) - r.slack);
            let (t3, g3) = worst(&|r| r.product_tail - r.analytic - r.product_slack);
            vec![
                Check::new(
                    "P{T ≥ t} ≤ P{n B_1⋯B_t ≥ 1}",
                    rows.iter().all(|r| r.pass_union),
                    format!("largest excess {g1:.4} at t = {t1}"),
                ),
                Check::new(
                    "P{T ≥ t} ≤ P{n B_1⋯B_(t-1) ≥ 1}",
                    rows.iter().all(|r| r.pass_prev),
                    format!("largest excess {g2:.4} at t = {t2}"),
                ),
                Check::new(
                    "moment bound ≥ P{n B_1⋯B_t ≥ 1}",
                    rows.iter().all(|r| r.pass_analytic),
                    format!("largest excess {g3:.4} at t = {t3}"),
                ),
            ]
        }
        Suite::Convergence => {
            let reference = 1.0 / g_of_k(8);
            let ratio = t_n_ratio(1 << 20, 8, budget.max(1), seed);
            let sweep = polar_sweep(&[1 << 10, 1 << 14], 8, budget.max(2), seed)?;
            let errs: Vec<f64> = sweep
                .iter()
                .map(|r| (r.summary.mean_over_log_n.unwrap_or(f64::NAN) - reference).abs())
                .collect();
            let gaps = polar_first_passage_gaps(&[1 << 10, 1 << 14], 8, budget.max(2), seed)?;
            let mut c = vec![
                Check::new(
                    "E[T_n]/log n within 10% of 1/g(8) at n = 2^20",
                    (ratio / reference - 1.0).abs() <= 0.1,
                    format!(
                        "{ratio:.5} vs {reference:.5} (ratio {:.4})",
                        ratio / reference
                    ),
                ),
                Check::new(
                    "mean(T̄)/log n approaches 1/g(8)",
                    errs[1] < errs[0],
                    format!("|error| {:.4} at 2^10, {:.4} at 2^14", errs[0], errs[1]),
                ),
                Check::new(
                    "mean |T̄ - T_n|/log n decreases",
                    gaps[1] < gaps[0],
                    format!("{:.4} at 2^10, {:.4} at 2^14", gaps[0], gaps[1]),
                ),
            ];
            c.extend(large_k_trend_checks());
            c
        }
        Suite::Oracle => {
            let rows = oracle_equivalence(budget as usize, (budget / 10).max(1) as usize, seed)?;
            let worst_a = rows
                .iter()
                .map(|r| r.tv_exact_vs_process)
                .fold(0.0, f64::max);
            let worst_b = rows
                .iter()
                .map(|r| r.tv_network_vs_process)
                .fold(0.0, f64::max);
            vec![
                Check::new(
                    "exact law vs recursion (TV < 0.01)",
                    worst_a < 0.01,
                    format!("worst TV {worst_a:.5} over {} cases", rows.len()),
                ),
                Check::new(
                    "built networks vs recursion (TV < 0.02)",
                    worst_b < 0.02,
                    format!("worst TV {worst_b:.5} over {} cases", rows.len()),
                ),
            ]
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        format: "kadlab-verify/1".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        suite,
        budget,
        seed,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances() {
        assert_eq!(printed_tolerance("0.3414171521"), 1e-10);
        assert_eq!(printed_tolerance("2.718281828"), 1e-9);
        assert_eq!(printed_tolerance("1"), 1e-9);
    }

    #[test]
    fn table_reproduced() {
        let checks = published_table_checks();
        assert_eq!(checks.len(), 30);
        for c in checks {
            assert!(c.pass, "{c}");
        }
    }

    #[test]
    fn small_suites_pass() {
        for suite in [Suite::Metric, Suite::Trie] {
            let r = run_suite(suite, 200, 1).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(run_suite(Suite::Constants, 0, 1).unwrap().pass);
        // the k = 10⁴ band holds only for c_k
        let trend = large_k_trend_checks();
        assert!(trend[0].pass && !trend[1].pass && !trend[2].pass);
    }

    #[test]
    fn small_oracle_suite() {
        let rows = oracle_equivalence(20_000, 2_000, 3).unwrap();
        assert_eq!(rows.len(), 40);
        for r in rows {
            assert!(r.tv_exact_vs_process < 0.03, "{r:?}");
            assert!(r.tv_network_vs_process < 0.06, "{r:?}");
        }
    }

    #[test]
    fn small_routing_suite() {
        let r = routing_suite(20, 5, 4).unwrap();
        assert_eq!(r.instances, 20);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
