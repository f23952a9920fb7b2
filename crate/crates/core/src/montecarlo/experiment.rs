use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{constant, g_of_k, harmonic, ConstantKind};
use crate::error::{Error, Result};
use crate::idspace::NodeId;
use crate::montecarlo::config::{ExperimentConfig, Measurement, Model};
use crate::montecarlo::ids::{generate_ids, IdSource};
use crate::montecarlo::samplers::sample_t_n;
use crate::montecarlo::{stream_rng, trial_rng};
use crate::network::{simulate_routing_process, simulate_routing_time, Network};
use crate::trie::IdTrie;

/// Schema tag of serialized results.
pub const RESULT_FORMAT: &str = "kadlab-result/1";

/// Up to this `d`, `t_sup_y` tries every target in `{0,1}^d`.
pub const EXHAUSTIVE_TARGET_BITS: usize = 12;
/// Random non-member targets per trial of `t_sup_y` above [`EXHAUSTIVE_TARGET_BITS`].
pub const NONMEMBER_TARGETS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 for a single value.
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
    /// `mean / log n` (natural log); absent when `n = 1`.
    pub mean_over_log_n: Option<f64>,
}

impl Summary {
    pub fn from_values(values: &[f64], log_n: f64) -> Summary {
        assert!(!values.is_empty(), "summary of no values");
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance = if count > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Summary {
            count,
            mean,
            variance,
            std_error: (variance / count as f64).sqrt(),
            min: sorted[0],
            q50: quantile(&sorted, 0.5),
            q90: quantile(&sorted, 0.9),
            q99: quantile(&sorted, 0.99),
            max: sorted[count - 1],
            mean_over_log_n: (log_n > 0.0).then(|| mean / log_n),
        }
    }
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Constants the empirical means are compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub inv_h_k: f64,
    pub inv_g_k: f64,
    pub c_k_prime: f64,
    pub c_k_star: f64,
    /// Which of the above the configured measurement targets.
    pub primary_name: String,
    pub primary: f64,
}

impl ReferenceValues {
    pub fn new(k: usize, model: Model, measurement: Measurement) -> Self {
        let inv_h_k = 1.0 / harmonic(k);
        let inv_g_k = 1.0 / g_of_k(k);
        let c_k_prime = constant(k, ConstantKind::SupTargets);
        let c_k_star = constant(k, ConstantKind::SupPairs);
        let (primary_name, primary) = match (measurement, model) {
            (Measurement::TN, _) | (Measurement::TPolar, Model::Random) => ("1/g(k)", inv_g_k),
            (Measurement::TSupY, _) => ("c_k'", c_k_prime),
            (Measurement::TSupXY, _) => ("c_k*", c_k_star),
            _ => ("1/H_k", inv_h_k),
        };
        ReferenceValues {
            inv_h_k,
            inv_g_k,
            c_k_prime,
            c_k_star,
            primary_name: primary_name.into(),
            primary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub summary: Summary,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub format: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub k: usize,
    pub log_n: f64,
    /// Source used in every trial of the deterministic model.
    pub x: Option<NodeId>,
    pub summary: Summary,
    pub reference: ReferenceValues,
    /// Named side measurements, e.g. `s_3` or `sup_nonmembers`.
    pub secondary: BTreeMap<String, Series>,
    pub values: Vec<f64>,
}

impl ExperimentResult {
    /// JSON with per-trial arrays only when `config.keep_trials` is set.
    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if !self.config.keep_trials {
            if let Some(obj) = v.as_object_mut() {
                obj.remove("values");
                if let Some(sec) = obj.get_mut("secondary").and_then(|s| s.as_object_mut()) {
                    for series in sec.values_mut() {
                        if let Some(o) = series.as_object_mut() {
                            o.remove("values");
                        }
                    }
                }
            }
        }
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        Ok(text)
    }

    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            measurement: self.config.measurement.to_string(),
            series: "value".into(),
            n: self.config.n,
            d: self.config.d,
            k: self.k,
            trials: self.config.trials,
            seed: self.seed,
            mean: self.summary.mean,
            variance: self.summary.variance,
            q50: self.summary.q50,
            q90: self.summary.q90,
            q99: self.summary.q99,
            max: self.summary.max,
            mean_over_log_n: self.summary.mean_over_log_n,
            reference_name: self.reference.primary_name.clone(),
            reference: self.reference.primary,
        }
    }

    /// Human-readable report with the reference constant beside the empirical mean.
    pub fn human(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "{} over {} trials (n = {}, d = {}, k = {}, seed = {})\n",
            self.config.measurement, s.count, self.config.n, self.config.d, self.k, self.seed
        );
        out += &format!(
            "  mean {:.4}  var {:.4}  q50 {}  q90 {}  q99 {}  max {}\n",
            s.mean, s.variance, s.q50, s.q90, s.q99, s.max
        );
        let normalized = s
            .mean_over_log_n
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        out += &format!(
            "  mean / log n = {normalized}   {} = {:.6}   (1/H_k = {:.6}, 1/g(k) = {:.6})\n",
            self.reference.primary_name,
            self.reference.primary,
            self.reference.inv_h_k,
            self.reference.inv_g_k
        );
        for (name, series) in &self.secondary {
            out += &format!(
                "  {name}: mean {:.4}  max {}\n",
                series.summary.mean, series.summary.max
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub measurement: String,
    pub series: String,
    pub n: u64,
    pub d: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
    pub mean_over_log_n: Option<f64>,
    pub reference_name: String,
    pub reference: f64,
}

/// One CSV row per result and per secondary series.
pub fn write_summary_csv<W: Write>(results: &[ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r.summary_row())?;
        for (name, series) in &r.secondary {
            let mut row = r.summary_row();
            let s = &series.summary;
            row.series = name.clone();
            (row.mean, row.variance, row.q50, row.q90, row.q99, row.max) =
                (s.mean, s.variance, s.q50, s.q90, s.q99, s.max);
            row.mean_over_log_n = s.mean_over_log_n;
            w.serialize(row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// `trial,value[,secondary…]` with one line per trial.
pub fn write_trials_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let names: Vec<&String> = result.secondary.keys().collect();
    let mut header = vec!["trial".to_string(), "value".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (i, v) in result.values.iter().enumerate() {
        let mut rec = vec![i.to_string(), v.to_string()];
        rec.extend(
            names
                .iter()
                .map(|n| result.secondary[*n].values[i].to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

struct Trial {
    value: f64,
    extra: Vec<f64>,
}

struct FixedSet {
    trie: IdTrie,
    x: NodeId,
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    k: usize,
    fixed: Option<FixedSet>,
}

impl Plan<'_> {
    fn extra_names(&self) -> Vec<String> {
        match self.cfg.measurement {
            Measurement::SSizes => (0..=self.cfg.s_steps).map(|t| format!("s_{t}")).collect(),
            Measurement::TSupY if self.cfg.d > EXHAUSTIVE_TARGET_BITS => {
                vec!["sup_members".into(), "sup_nonmembers".into()]
            }
            _ => Vec::new(),
        }
    }

    fn run_trial(&self, index: u64) -> Result<Trial> {
        let cfg = self.cfg;
        let mut rng = trial_rng(cfg.master_seed, index);
        let rng = &mut rng;
        if cfg.measurement == Measurement::TN {
            return Ok(Trial {
                value: sample_t_n(cfg.n, self.k, rng) as f64,
                extra: Vec::new(),
            });
        }
        let owned;
        let (trie, x) = match &self.fixed {
            Some(f) => (&f.trie, f.x),
            None => {
                let ids = generate_ids(&IdSource::Random, cfg.n, cfg.d, rng)?;
                let x = ids[0];
                owned = IdTrie::build(ids)?;
                (&owned, x)
            }
        };
        let ones = NodeId::ones(cfg.d);
        let k = self.k;
        let plain = |value: usize| Trial {
            value: value as f64,
            extra: Vec::new(),
        };
        match cfg.measurement {
            Measurement::TFixedPair => {
                let y = cfg.y.unwrap_or(ones);
                Ok(plain(simulate_routing_time(trie, &x, &y, k, rng)?))
            }
            Measurement::TPolar => Ok(plain(simulate_routing_time(
                trie,
                &x,
                &x.complement(),
                k,
                rng,
            )?)),
            Measurement::SSizes => {
                let y = cfg.y.unwrap_or(ones);
                let trace = simulate_routing_process(trie, &x, &y, k, rng)?;
                let extra = (0..=cfg.s_steps)
                    .map(|t| trace.subtree_sizes.get(t).copied().unwrap_or(0) as f64)
                    .collect();
                Ok(Trial {
                    value: trace.routing_time() as f64,
                    extra,
                })
            }
            Measurement::TSupY => {
                let net = Network::from_trie(trie.clone(), k, rng)?;
                sup_over_targets(&net, &x, rng)
            }
            Measurement::TSupXY => {
                let net = Network::from_trie(trie.clone(), k, rng)?;
                Ok(plain(sup_over_pairs(&net, cfg.pair_samples, rng)?))
            }
            Measurement::TN => unreachable!("handled above"),
        }
    }
}

fn sup_over_targets<R: Rng + ?Sized>(net: &Network, x: &NodeId, rng: &mut R) -> Result<Trial> {
    let d = net.bits();
    if d <= EXHAUSTIVE_TARGET_BITS {
        let mut sup = 0;
        for v in 0..1u64 << d {
            sup = sup.max(net.routing_time(x, &NodeId::from_u64(v, d)?)?);
        }
        return Ok(Trial {
            value: sup as f64,
            extra: Vec::new(),
        });
    }
    let mut members = 0;
    for y in net.trie().leaves() {
        members = members.max(net.routing_time(x, y)?);
    }
    let mut others = 0;
    let mut drawn = 0;
    while drawn < NONMEMBER_TARGETS {
        let y = NodeId::random(d, rng);
        if net.trie().contains(&y) {
            continue;
        }
        others = others.max(net.routing_time(x, &y)?);
        drawn += 1;
    }
    Ok(Trial {
        value: members.max(others) as f64,
        extra: vec![members as f64, others as f64],
    })
}

/// Max of `T_xy` over sampled pairs: `x` a uniform member, `y` alternately a
/// uniform member and a uniform point of `{0,1}^d`. `samples = 0` is exhaustive
/// over members `x` and over all targets (`d` ≤ 12) or member targets.
fn sup_over_pairs<R: Rng + ?Sized>(net: &Network, samples: usize, rng: &mut R) -> Result<usize> {
    let leaves = net.trie().leaves();
    let d = net.bits();
    let mut sup = 0;
    if samples == 0 {
        for x in leaves {
            if d <= EXHAUSTIVE_TARGET_BITS {
                for v in 0..1u64 << d {
                    sup = sup.max(net.routing_time(x, &NodeId::from_u64(v, d)?)?);
                }
            } else {
                for y in leaves {
                    sup = sup.max(net.routing_time(x, y)?);
                }
            }
        }
        return Ok(sup);
    }
    for j in 0..samples {
        let x = leaves[rng.random_range(0..leaves.len())];
        let y = if j % 2 == 0 {
            leaves[rng.random_range(0..leaves.len())]
        } else {
            NodeId::random(d, rng)
        };
        sup = sup.max(net.routing_time(&x, &y)?);
    }
    Ok(sup)
}

/// Runs every trial of `cfg` and aggregates in trial order.
///
/// Trials run on a pool of `cfg.workers` threads; each trial draws from its
/// own stream, so the result is identical for any worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let k = cfg.k();
    let fixed = match (cfg.model, cfg.measurement) {
        (_, Measurement::TN) | (Model::Random, _) => None,
        (Model::Deterministic, _) => {
            let mut rng = stream_rng(cfg.master_seed, 0);
            let ids = generate_ids(&cfg.id_source, cfg.n, cfg.d, &mut rng)?;
            let x = cfg.x.unwrap_or(ids[0]);
            let trie = IdTrie::build(ids)?;
            trie.require_leaf(&x)?;
            Some(FixedSet { trie, x })
        }
    };
    let plan = Plan { cfg, k, fixed };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(vec![format!("thread pool: {e}")]))?;
    let trials: Vec<Trial> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| plan.run_trial(i))
            .collect::<Result<_>>()
    })?;

    let log_n = (cfg.n as f64).ln();
    let values: Vec<f64> = trials.iter().map(|t| t.value).collect();
    let secondary = plan
        .extra_names()
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let vals: Vec<f64> = trials.iter().map(|t| t.extra[j]).collect();
            let series = Series {
                summary: Summary::from_values(&vals, log_n),
                values: vals,
            };
            (name, series)
        })
        .collect();
    Ok(ExperimentResult {
        format: RESULT_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seed: cfg.master_seed,
        k,
        log_n,
        x: plan.fixed.as_ref().map(|f| f.x),
        summary: Summary::from_values(&values, log_n),
        reference: ReferenceValues::new(k, cfg.model, cfg.measurement),
        secondary,
        values,
    })
}
