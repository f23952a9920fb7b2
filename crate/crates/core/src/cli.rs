//! Command-line front end.
//!
//! Exit status: 0 when everything requested succeeded and every check passed,
//! 1 when a verification check failed, 2 on usage or input errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constants::{constants_table, ConstantsRow};
use crate::error::{Error, Result};
use crate::idspace::{read_id_file, NodeId};
use crate::montecarlo::config::ConfigBuilder;
use crate::montecarlo::experiment::{run_experiment, write_summary_csv, write_trials_csv};
use crate::montecarlo::trial_rng;
use crate::network::{render_id, Network};
use crate::verify::{run_suite, Suite, SuiteReport};

pub const SEED_ENV: &str = "KADLAB_SEED";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "kadlab",
    version,
    about = "Kademlia routing-time model: constants, routes, experiments, checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; defaults to $KADLAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of c_k, c_k' and c_k*.
    Constants {
        /// `1..10`, `3`, `1,2,8` or a mix.
        #[arg(long, default_value = "1..10")]
        k: String,
        /// Significant digits in rendered values.
        #[arg(long, default_value_t = 10)]
        precision: usize,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a network from an id file and trace one route.
    Route {
        #[arg(long)]
        ids: PathBuf,
        /// Id width; inferred from the file when absent.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Run a Monte-Carlo experiment from a config file and/or flags.
    Experiment(Box<ExperimentArgs>),
    /// Run a named verification suite.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        /// Trials; the default depends on the suite.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub measurement: Option<String>,
    /// Comma-separated list runs one experiment per value.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub workers: Option<String>,
    #[arg(long)]
    pub ids: Option<String>,
    #[arg(long)]
    pub ids_file: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub keep_trials: bool,
    /// Also write per-trial values as CSV here.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// With several `n` values this names a directory.
    #[command(flatten)]
    pub common: Common,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse()
}

/// `1..10`, `1..=10`, `1-10`, `4` and comma-separated mixes; ranges are inclusive.
pub fn parse_k_range(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bounds = part
            .split_once("..=")
            .or_else(|| part.split_once(".."))
            .or_else(|| part.split_once('-'));
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| format!("bad k {t:?} in {s:?}"))
        };
        match bounds {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("k range is empty".into());
    }
    Ok(out)
}

/// `value` with `digits` significant digits in fixed notation.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i64;
    let decimals = (digits.max(1) as i64 - 1 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn seed_or_env(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(vec![format!("{SEED_ENV}: cannot parse {v:?}")])),
        Err(_) => Ok(0),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn echo(line: &str) {
    eprintln!("# kadlab {VERSION} {line}");
}

#[derive(Serialize)]
struct ConstantsOutput<'a> {
    format: &'static str,
    version: &'static str,
    k: &'a [usize],
    precision: usize,
    rows: &'a [ConstantsRow],
}

pub fn cmd_constants(ks: &[usize], precision: usize, format: Format) -> Result<String> {
    let rows = constants_table(ks.iter().copied());
    let f = |v: f64| format_significant(v, precision);
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&ConstantsOutput {
                format: "kadlab-constants/1",
                version: VERSION,
                k: ks,
                precision,
                rows: &rows,
            })?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["k", "c_k", "c_k_prime", "c_k_star"])?;
            for r in &rows {
                w.write_record([r.k.to_string(), f(r.c_k), f(r.c_k_prime), f(r.c_k_star)])?;
            }
            String::from_utf8(
                w.into_inner()
                    .map_err(|e| Error::io("<csv>", e.into_error()))?,
            )
            .expect("csv output is utf-8")
        }
        Format::Human => {
            let mut s = format!(
                "# kadlab {VERSION} constants k={} precision={precision}\n",
                ks.iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            );
            s += &format!(
                "{:>6}  {:>16}  {:>16}  {:>16}\n",
                "k", "c_k", "c_k'", "c_k*"
            );
            for r in &rows {
                s += &format!(
                    "{:>6}  {:>16}  {:>16}  {:>16}\n",
                    r.k,
                    f(r.c_k),
                    f(r.c_k_prime),
                    f(r.c_k_star)
                );
            }
            s
        }
    })
}

#[derive(Serialize)]
struct RouteOutput<'a> {
    format: &'static str,
    version: &'static str,
    ids_file: &'a Path,
    d: usize,
    k: usize,
    seed: u64,
    routing_time: usize,
    trace: &'a crate::network::RoutingTrace,
}

pub fn cmd_route(
    ids_file: &Path,
    d: Option<usize>,
    k: usize,
    x: &str,
    y: &str,
    seed: u64,
    format: Format,
) -> Result<String> {
    if k == 0 {
        return Err(Error::Domain { what: "k" });
    }
    let ids = read_id_file(ids_file, d)?;
    let width = ids.first().ok_or(Error::EmptyIdSet)?.len();
    let parse = |s: &str| {
        NodeId::parse_with_len(s, width)
            .map_err(|e| Error::Config(vec![format!("cannot parse id {s:?}: {e}")]))
    };
    let (x, y) = (parse(x)?, parse(y)?);
    let net = Network::build(ids, k, &mut trial_rng(seed, 0))?;
    let trace = net.route(&x, &y)?;
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&RouteOutput {
                format: "kadlab-route/1",
                version: VERSION,
                ids_file,
                d: width,
                k,
                seed,
                routing_time: trace.routing_time(),
                trace: &trace,
            })?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["hop", "id", "lca_depth", "subtree_size"])?;
            for (t, z) in trace.hops.iter().enumerate() {
                w.write_record([
                    t.to_string(),
                    render_id(z),
                    trace.hop_depths[t].to_string(),
                    trace.subtree_sizes[t].to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?)
                .expect("csv output is utf-8")
        }
        Format::Human => format!(
            "# kadlab {VERSION} route ids_file={} d={width} k={k} seed={seed}\n# x={} y={} y*={}\n{}T_xy = {}\n",
            ids_file.display(),
            render_id(&x),
            render_id(&y),
            render_id(&trace.closest),
            trace.dump(),
            trace.routing_time()
        ),
    })
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let mut builder = ConfigBuilder::new();
    if let Some(p) = &args.config {
        builder = builder.parse_file(p)?;
    }
    let explicit_seed =
        args.common.seed.is_some() || args.set.iter().any(|s| s.trim_start().starts_with("seed"));
    let file_has_seed = match &args.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::io(p, e))?
            .lines()
            .any(|l| {
                l.split('#')
                    .next()
                    .unwrap_or("")
                    .trim_start()
                    .starts_with("seed")
            }),
        None => false,
    };
    if !explicit_seed && !file_has_seed {
        builder = builder.set("seed", seed_or_env(None)?.to_string());
    }
    let mut bad = Vec::new();
    for kv in &args.set {
        match kv.split_once('=') {
            Some((key, value)) => builder = builder.set(key.trim(), value.trim()),
            None => bad.push(format!("--set {kv:?}: expected KEY=VALUE")),
        }
    }
    let flags = [
        ("model", &args.model),
        ("measurement", &args.measurement),
        ("d", &args.d),
        ("k", &args.k),
        ("trials", &args.trials),
        ("workers", &args.workers),
        ("ids", &args.ids),
        ("ids_file", &args.ids_file),
        ("x", &args.x),
        ("y", &args.y),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            builder = builder.set(key, v.clone());
        }
    }
    if let Some(s) = args.common.seed {
        builder = builder.set("seed", s.to_string());
    }
    if args.keep_trials {
        builder = builder.set("keep_trials", "true");
    }
    let ns: Vec<Option<&str>> = match &args.n {
        Some(list) => list.split(',').map(|s| Some(s.trim())).collect(),
        None => vec![None],
    };
    let mut configs = Vec::new();
    for n in &ns {
        let b = match n {
            Some(v) => builder.clone().set("n", *v),
            None => builder.clone(),
        };
        match b.build() {
            Ok(c) => configs.push(c),
            Err(Error::Config(msgs)) => bad.extend(msgs),
            Err(e) => return Err(e),
        }
    }
    bad.dedup();
    if !bad.is_empty() {
        return Err(Error::Config(bad));
    }
    let multi = configs.len() > 1;
    if let (true, Some(dir)) = (multi, &args.common.out) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for cfg in &configs {
        echo(&format!(
            "experiment {}",
            cfg.to_kv().trim_end().replace('\n', " ")
        ));
        let result = run_experiment(cfg)?;
        let text = match args.format {
            Format::Json => result.to_json()?,
            Format::Csv => {
                let mut buf = Vec::new();
                write_summary_csv(std::slice::from_ref(&result), &mut buf)?;
                String::from_utf8(buf).expect("csv output is utf-8")
            }
            Format::Human => format!(
                "# kadlab {VERSION}\n{}\n{}",
                cfg.to_kv().trim_end(),
                result.human()
            ),
        };
        let target = match (&args.common.out, multi) {
            (Some(dir), true) => {
                let ext = match args.format {
                    Format::Json => "json",
                    Format::Csv => "csv",
                    Format::Human => "txt",
                };
                Some(dir.join(format!("{}_n{}.{ext}", cfg.measurement, cfg.n)))
            }
            (out, _) => out.clone(),
        };
        emit(target.as_deref(), &text)?;
        if let Some(path) = &args.trials_csv {
            let path = if multi {
                path.with_file_name(format!(
                    "{}_n{}.csv",
                    path.file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("trials"),
                    cfg.n
                ))
            } else {
                path.clone()
            };
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_trials_csv(&result, file)?;
        }
    }
    Ok(())
}

fn suite_text(report: &SuiteReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["suite", "budget", "seed", "check", "pass", "detail"])?;
            for c in &report.checks {
                w.write_record([
                    report.suite.name().to_string(),
                    report.budget.to_string(),
                    report.seed.to_string(),
                    c.name.clone(),
                    c.pass.to_string(),
                    c.detail.clone(),
                ])?;
            }
            String::from_utf8(
                w.into_inner()
                    .map_err(|e| Error::io("<csv>", e.into_error()))?,
            )
            .expect("csv output is utf-8")
        }
        Format::Human => {
            let mut s = format!(
                "# kadlab {VERSION} verify suite={} budget={} seed={}\n",
                report.suite.name(),
                report.budget,
                report.seed
            );
            for c in &report.checks {
                s += &format!("{c}\n");
            }
            s += if report.pass {
                "suite PASSED\n"
            } else {
                "suite FAILED\n"
            };
            s
        }
    })
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Constants {
            k,
            precision,
            format,
            out,
        } => {
            let ks = parse_k_range(&k).map_err(|e| Error::Config(vec![e]))?;
            echo(&format!("constants k={k} precision={precision}"));
            emit(out.as_deref(), &cmd_constants(&ks, precision, format)?)?;
            Ok(0)
        }
        Command::Route {
            ids,
            d,
            k,
            x,
            y,
            format,
            common,
        } => {
            let seed = seed_or_env(common.seed)?;
            echo(&format!(
                "route ids={} k={k} x={x} y={y} seed={seed}",
                ids.display()
            ));
            emit(
                common.out.as_deref(),
                &cmd_route(&ids, d, k, &x, &y, seed, format)?,
            )?;
            Ok(0)
        }
        Command::Experiment(args) => {
            experiment(&args)?;
            Ok(0)
        }
        Command::Verify {
            suite,
            budget,
            format,
            common,
        } => {
            let seed = seed_or_env(common.seed)?;
            let budget = budget.unwrap_or(suite.default_budget());
            echo(&format!(
                "verify suite={} budget={budget} seed={seed}",
                suite.name()
            ));
            let report = run_suite(suite, budget, seed)?;
            emit(common.out.as_deref(), &suite_text(&report, format)?)?;
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}
