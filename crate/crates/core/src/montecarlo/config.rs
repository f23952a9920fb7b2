//! Experiment configuration and its flat `key = value` text form.
//!
//! ```text
//! # polar routing time, random model
//! model = random
//! ids = random
//! n = 2^14
//! d = 64
//! k = 8              # or log_n, or n_pow:0.5
//! trials = 2000
//! seed = 7
//! measurement = t_polar
//! ```
//!
//! Keys: `model`, `ids`, `cluster_prefix`, `cluster_fraction`, `ids_file`, `n`,
//! `d`, `k`, `trials`, `seed`, `measurement`, `workers`, `x`, `y`,
//! `pair_samples`, `s_steps`, `keep_trials`. Later assignments override
//! earlier ones, which is how command-line flags override a file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idspace::NodeId;
use crate::montecarlo::ids::IdSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// One ID set, drawn once from stream 0 and kept for every trial.
    Deterministic,
    /// A fresh uniform ID set per trial.
    Random,
}

/// How `k` is chosen from `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum KRule {
    Fixed(usize),
    /// `⌈log n⌉`
    LogN,
    /// `⌈n^θ⌉`
    NPow(f64),
}

impl KRule {
    pub fn resolve(&self, n: u64) -> usize {
        let raw = match *self {
            KRule::Fixed(k) => return k,
            KRule::LogN => (n as f64).ln(),
            KRule::NPow(theta) => (n as f64).powf(theta),
        };
        // n^θ can land a hair above an exact integer
        let near = raw.round();
        let k = if (raw - near).abs() < 1e-9 {
            near
        } else {
            raw.ceil()
        };
        (k as usize).max(1)
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Fixed(k) => write!(f, "{k}"),
            KRule::LogN => write!(f, "log_n"),
            KRule::NPow(theta) => write!(f, "n_pow:{theta}"),
        }
    }
}

impl FromStr for KRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "log_n" {
            return Ok(KRule::LogN);
        }
        if let Some(theta) = s.strip_prefix("n_pow:") {
            return parse_ratio(theta).map(KRule::NPow);
        }
        s.parse()
            .map(KRule::Fixed)
            .map_err(|_| format!("k: expected an integer, log_n or n_pow:θ, got {s:?}"))
    }
}

/// `θ` as a decimal or `a/b`.
fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("expected a number or a/b, got {s:?}");
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    /// `T_xy` for one pair.
    TFixedPair,
    /// `sup_y T_xy` for a fixed source.
    TSupY,
    /// `sup_{x,y} T_xy`.
    TSupXY,
    /// `T_{x x̄}` from `x` to its polar opposite.
    TPolar,
    /// The pool sizes `|S_0|, |S_1|, …` along one route.
    SSizes,
    /// First passage of the `G` walk over `log₂ n`.
    TN,
}

impl Measurement {
    pub const ALL: [Measurement; 6] = [
        Measurement::TFixedPair,
        Measurement::TSupY,
        Measurement::TSupXY,
        Measurement::TPolar,
        Measurement::SSizes,
        Measurement::TN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measurement::TFixedPair => "t_fixed_pair",
            Measurement::TSupY => "t_sup_y",
            Measurement::TSupXY => "t_sup_xy",
            Measurement::TPolar => "t_polar",
            Measurement::SSizes => "s_sizes",
            Measurement::TN => "t_n",
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measurement {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Measurement::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Measurement::ALL.iter().map(|m| m.name()).collect();
                format!("measurement: unknown {s:?} (one of {})", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub id_source: IdSource,
    pub n: u64,
    pub d: usize,
    pub k: KRule,
    pub trials: u64,
    pub master_seed: u64,
    pub measurement: Measurement,
    /// Worker threads; `None` lets the pool decide. Results do not depend on it.
    pub workers: Option<usize>,
    pub x: Option<NodeId>,
    pub y: Option<NodeId>,
    /// Sampled `(x, y)` pairs per trial for `t_sup_xy`; 0 means exhaustive.
    pub pair_samples: usize,
    /// Highest `t` reported by `s_sizes`.
    pub s_steps: usize,
    pub keep_trials: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: Model::Deterministic,
            id_source: IdSource::Random,
            n: 1024,
            d: 64,
            k: KRule::Fixed(8),
            trials: 1000,
            master_seed: 0,
            measurement: Measurement::TPolar,
            workers: None,
            x: None,
            y: None,
            pair_samples: 1000,
            s_steps: 5,
            keep_trials: false,
        }
    }
}

impl ExperimentConfig {
    pub fn k(&self) -> usize {
        self.k.resolve(self.n)
    }

    /// Every violated constraint, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d == 0 || self.d > crate::idspace::MAX_BITS {
            out.push(format!(
                "d = {} is outside 1..={}",
                self.d,
                crate::idspace::MAX_BITS
            ));
        }
        if self.n == 0 {
            out.push("n must be at least 1".into());
        }
        let need = ceil_log2(self.n);
        if self.d < need {
            out.push(format!(
                "d = {} is below ⌈log₂ n⌉ = {need}; the model assumes d ≥ log₂ n",
                self.d
            ));
        }
        if self.trials == 0 {
            out.push("trials must be at least 1".into());
        }
        match self.k {
            KRule::Fixed(0) => out.push("k must be at least 1".into()),
            KRule::NPow(theta) if !(theta > 0.0 && theta < 1.0) => {
                out.push(format!("n_pow exponent θ = {theta} must lie in (0, 1)"))
            }
            _ => {}
        }
        if self.workers == Some(0) {
            out.push("workers must be at least 1".into());
        }
        if self.model == Model::Random && self.id_source != IdSource::Random {
            out.push("the random model draws uniform ids; set ids = random".into());
        }
        if self.model == Model::Random && self.x.is_some() {
            out.push("x cannot be fixed in the random model".into());
        }
        if let IdSource::Clustered { prefix, fraction } = &self.id_source {
            if prefix.is_empty() || !prefix.chars().all(|c| c == '0' || c == '1') {
                out.push(format!("cluster_prefix {prefix:?} is not a binary string"));
            } else if prefix.len() > self.d {
                out.push(format!("cluster_prefix is longer than d = {}", self.d));
            }
            if !(0.0..=1.0).contains(fraction) {
                out.push(format!("cluster_fraction {fraction} is outside [0, 1]"));
            }
        }
        for (name, id) in [("x", &self.x), ("y", &self.y)] {
            if let Some(id) = id {
                if id.len() != self.d {
                    out.push(format!("{name} has {} bits but d = {}", id.len(), self.d));
                }
            }
        }
        match self.measurement {
            Measurement::TN if self.n < 2 => out.push("t_n needs n ≥ 2".into()),
            Measurement::TPolar if self.y.is_some() => {
                out.push("t_polar routes to the polar opposite of x; drop y".into())
            }
            Measurement::TSupY if self.y.is_some() => {
                out.push("t_sup_y ranges over targets; drop y".into())
            }
            Measurement::TSupXY if self.x.is_some() || self.y.is_some() => {
                out.push("t_sup_xy ranges over pairs; drop x and y".into())
            }
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Key-value rendering that [`ConfigBuilder`] reads back to the same config.
    pub fn to_kv(&self) -> String {
        let mut lines = vec![
            format!(
                "model = {}",
                match self.model {
                    Model::Deterministic => "deterministic",
                    Model::Random => "random",
                }
            ),
            format!(
                "ids = {}",
                match &self.id_source {
                    IdSource::Random => "random",
                    IdSource::Sequential => "sequential",
                    IdSource::Clustered { .. } => "clustered",
                    IdSource::File { .. } => "file",
                }
            ),
        ];
        match &self.id_source {
            IdSource::Clustered { prefix, fraction } => {
                lines.push(format!("cluster_prefix = {prefix}"));
                lines.push(format!("cluster_fraction = {fraction}"));
            }
            IdSource::File { path } => lines.push(format!("ids_file = {}", path.display())),
            _ => {}
        }
        lines.extend([
            format!("n = {}", self.n),
            format!("d = {}", self.d),
            format!("k = {}", self.k),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.master_seed),
            format!("measurement = {}", self.measurement),
        ]);
        if let Some(w) = self.workers {
            lines.push(format!("workers = {w}"));
        }
        if let Some(x) = &self.x {
            lines.push(format!("x = {}", x.to_binary_string()));
        }
        if let Some(y) = &self.y {
            lines.push(format!("y = {}", y.to_binary_string()));
        }
        lines.extend([
            format!("pair_samples = {}", self.pair_samples),
            format!("s_steps = {}", self.s_steps),
            format!("keep_trials = {}", self.keep_trials),
        ]);
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

fn ceil_log2(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        (64 - (n - 1).leading_zeros()) as usize
    }
}

const KEYS: [&str; 17] = [
    "model",
    "ids",
    "cluster_prefix",
    "cluster_fraction",
    "ids_file",
    "n",
    "d",
    "k",
    "trials",
    "seed",
    "measurement",
    "workers",
    "x",
    "y",
    "pair_samples",
    "s_steps",
    "keep_trials",
];

/// Raw assignments collected from files and flags, parsed together by [`ConfigBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct ConfigBuilder {
    values: BTreeMap<String, String>,
    errors: Vec<String>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse_text(mut self, text: &str, origin: &str) -> Self {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((key, value)) => {
                    let key = key.trim();
                    if KEYS.contains(&key) {
                        self.values.insert(key.into(), value.trim().into());
                    } else {
                        self.errors
                            .push(format!("{origin}:{}: unknown key {key:?}", idx + 1));
                    }
                }
                None => self
                    .errors
                    .push(format!("{origin}:{}: expected `key = value`", idx + 1)),
            }
        }
        self
    }

    pub fn parse_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(self.parse_text(&text, &path.display().to_string()))
    }

    pub fn set(mut self, key: &str, value: impl Into<String>) -> Self {
        if KEYS.contains(&key) {
            self.values.insert(key.into(), value.into());
        } else {
            self.errors.push(format!("unknown key {key:?}"));
        }
        self
    }

    /// Parses every key and validates the result, reporting all problems at once.
    pub fn build(self) -> Result<ExperimentConfig> {
        let mut errors = self.errors;
        let mut cfg = ExperimentConfig::default();
        let get = |key: &str| self.values.get(key).map(String::as_str);

        fn parse<T: FromStr>(key: &str, v: &str, errors: &mut Vec<String>) -> Option<T> {
            match v.parse() {
                Ok(x) => Some(x),
                Err(_) => {
                    errors.push(format!("{key}: cannot parse {v:?}"));
                    None
                }
            }
        }

        if let Some(v) = get("model") {
            match v {
                "deterministic" => cfg.model = Model::Deterministic,
                "random" => cfg.model = Model::Random,
                _ => errors.push(format!(
                    "model: expected deterministic or random, got {v:?}"
                )),
            }
        }
        if let Some(v) = get("n") {
            match parse_count(v) {
                Some(n) => cfg.n = n,
                None => errors.push(format!("n: cannot parse {v:?}")),
            }
        }
        if let Some(v) = get("d") {
            cfg.d = parse("d", v, &mut errors).unwrap_or(cfg.d);
        }
        if let Some(v) = get("k") {
            match v.parse() {
                Ok(k) => cfg.k = k,
                Err(e) => errors.push(e),
            }
        }
        if let Some(v) = get("trials") {
            match parse_count(v) {
                Some(t) => cfg.trials = t,
                None => errors.push(format!("trials: cannot parse {v:?}")),
            }
        }
        if let Some(v) = get("seed") {
            cfg.master_seed = parse("seed", v, &mut errors).unwrap_or(0);
        }
        if let Some(v) = get("measurement") {
            match v.parse() {
                Ok(m) => cfg.measurement = m,
                Err(e) => errors.push(e),
            }
        }
        if let Some(v) = get("workers") {
            cfg.workers = parse("workers", v, &mut errors);
        }
        if let Some(v) = get("pair_samples") {
            cfg.pair_samples = parse("pair_samples", v, &mut errors).unwrap_or(cfg.pair_samples);
        }
        if let Some(v) = get("s_steps") {
            cfg.s_steps = parse("s_steps", v, &mut errors).unwrap_or(cfg.s_steps);
        }
        if let Some(v) = get("keep_trials") {
            cfg.keep_trials = parse("keep_trials", v, &mut errors).unwrap_or(false);
        }
        let ids = get("ids").unwrap_or("random");
        cfg.id_source = match ids {
            "random" => IdSource::Random,
            "sequential" => IdSource::Sequential,
            "clustered" => IdSource::Clustered {
                prefix: get("cluster_prefix").unwrap_or("").to_string(),
                fraction: get("cluster_fraction")
                    .and_then(|v| parse("cluster_fraction", v, &mut errors))
                    .unwrap_or(0.5),
            },
            "file" => match get("ids_file") {
                Some(p) => IdSource::File {
                    path: PathBuf::from(p),
                },
                None => {
                    errors.push("ids = file needs ids_file".into());
                    IdSource::Random
                }
            },
            other => {
                errors.push(format!(
                    "ids: expected random, sequential, clustered or file, got {other:?}"
                ));
                IdSource::Random
            }
        };
        if ids != "clustered"
            && (get("cluster_prefix").is_some() || get("cluster_fraction").is_some())
        {
            errors.push("cluster_prefix and cluster_fraction need ids = clustered".into());
        }
        if ids != "file" && get("ids_file").is_some() {
            errors.push("ids_file needs ids = file".into());
        }
        for (key, slot) in [("x", &mut cfg.x), ("y", &mut cfg.y)] {
            if let Some(v) = get(key) {
                match NodeId::parse_with_len(v, cfg.d) {
                    Ok(id) => *slot = Some(id),
                    Err(e) => errors.push(format!("{key}: {e}")),
                }
            }
        }
        errors.extend(cfg.problems());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// A count written as an integer, `a^b` or `aeb`.
fn parse_count(s: &str) -> Option<u64> {
    if let Some((base, exp)) = s.split_once('^') {
        let base: u64 = base.trim().parse().ok()?;
        let exp: u32 = exp.trim().parse().ok()?;
        return base.checked_pow(exp);
    }
    if let Some((mant, exp)) = s.split_once(['e', 'E']) {
        let mant: u64 = mant.trim().parse().ok()?;
        let exp: u32 = exp.trim().parse().ok()?;
        return 10u64.checked_pow(exp)?.checked_mul(mant);
    }
    s.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_and_overrides() {
        let text = "# sweep\nmodel = random\nn = 2^14 # inline\nd = 64\nk = 8\ntrials = 1e3\nseed = 9\nmeasurement = t_polar\n";
        let cfg = ConfigBuilder::new()
            .parse_text(text, "cfg")
            .set("trials", "20")
            .build()
            .unwrap();
        assert_eq!(cfg.model, Model::Random);
        assert_eq!(cfg.n, 16384);
        assert_eq!(cfg.trials, 20);
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.measurement, Measurement::TPolar);
    }

    #[test]
    fn round_trips_through_kv() {
        let cfg = ConfigBuilder::new()
            .set("ids", "clustered")
            .set("cluster_prefix", "01")
            .set("cluster_fraction", "0.3")
            .set("n", "100")
            .set("d", "16")
            .set("k", "n_pow:1/2")
            .set("measurement", "t_fixed_pair")
            .set("x", "0000000000000001")
            .set("workers", "2")
            .build()
            .unwrap();
        assert_eq!(cfg.k, KRule::NPow(0.5));
        let back = ConfigBuilder::new()
            .parse_text(&cfg.to_kv(), "echo")
            .build()
            .unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn collects_every_error() {
        let err = ConfigBuilder::new()
            .parse_text(
                "n = 1024\nd = 8\ntrials = 0\nk = n_pow:1.5\nbogus = 1\nnot a pair\n",
                "f",
            )
            .build()
            .unwrap_err();
        let Error::Config(list) = err else {
            panic!("wrong error kind")
        };
        assert!(list.iter().any(|m| m.contains("unknown key \"bogus\"")));
        assert!(list.iter().any(|m| m.contains("f:6")));
        let err = ConfigBuilder::new()
            .parse_text("n = 1024\nd = 8\ntrials = 0\nk = n_pow:1.5\n", "f")
            .build()
            .unwrap_err();
        let Error::Config(list) = err else {
            panic!("wrong error kind")
        };
        assert_eq!(list.len(), 3, "{list:?}");
        assert!(list[0].contains("d ≥ log₂ n"));
    }

    #[test]
    fn k_rules() {
        assert_eq!(KRule::Fixed(3).resolve(10), 3);
        assert_eq!(KRule::LogN.resolve(1000), 7);
        assert_eq!(KRule::NPow(0.5).resolve(4096), 64);
        assert_eq!(KRule::NPow(0.5).resolve(4097), 65);
        assert_eq!(KRule::NPow(0.5).resolve(1), 1);
        assert_eq!("n_pow:0.25".parse::<KRule>().unwrap(), KRule::NPow(0.25));
        assert!("n_pow:x".parse::<KRule>().is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("2^17"), Some(131072));
        assert_eq!(parse_count("1e5"), Some(100_000));
        assert_eq!(parse_count("42"), Some(42));
        assert_eq!(parse_count("2^70"), None);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
    }

    #[test]
    fn model_constraints() {
        let err = ConfigBuilder::new()
            .set("model", "random")
            .set("ids", "sequential")
            .set("d", "16")
            .set("x", "0000000000000001")
            .build()
            .unwrap_err();
        let Error::Config(list) = err else {
            panic!("wrong error kind")
        };
        assert_eq!(list.len(), 2, "{list:?}");
    }
}
