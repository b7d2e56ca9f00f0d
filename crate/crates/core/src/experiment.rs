//! Named, seeded experiments with replayable records.
//!
//! A record holds everything needed to rerun it: the command, its parameters
//! as given, and the master seed. Replaying reruns the command and compares
//! every field except wall time and version.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::growth::{
    bell_residual, check_general_covariance, check_general_covariance_exact, check_general_covariance_with, down_sets,
    grow, post_frequency, post_probability_asymptotic, shape_probability, CsgParams, GrowthError,
};
use crate::invariance::{
    dlr_check, finite_uniform_stem_probability, ladder_poset, ladder_stem_probability, quadrant_bottom_probabilities,
    stem_probability_mc, InvarianceError, OrderedStem,
};
use crate::poset::{is_semiorder, naturally_labelled_posets, Poset, PosetError};
use crate::rng::run_replicas;
use crate::sprinkle::{midpoint_dimension_stat, sprinkle_region, Region, SprinkleError, SprinkleMode, SprinkleStat};
use crate::stats::{poisson_pmf, summarize, total_variation};
use crate::uniform::{
    class_tables, random_kd_order, relations_string, rgo_semiorder_limit_experiment, sample_from_poson,
    sampled_profile, swappable_pairs, PermutationPair, SemiorderPoson, UniformError,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Mean of the GUE Tracy-Widom law, the first correction to `2√n`.
pub const TRACY_WIDOM_MEAN: f64 = -1.7711;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("parameter error: {0}")]
    Schema(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("replay mismatch at {field}: recorded {expected}, got {actual}")]
    ReplayMismatch {
        field: String,
        expected: String,
        actual: String,
    },
    #[error(transparent)]
    Sprinkle(#[from] SprinkleError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Invariance(#[from] InvarianceError),
    #[error(transparent)]
    Uniform(#[from] UniformError),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Process exit code: 2 for usage errors, 3 for validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::UnknownCommand(_)
            | ExperimentError::Schema(_)
            | ExperimentError::Io(_)
            | ExperimentError::Json(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::UnknownCommand(_) => "UnknownCommand",
            ExperimentError::Schema(_) => "SchemaError",
            ExperimentError::ReplayMismatch { .. } => "ReplayMismatch",
            ExperimentError::Io(_) => "IoError",
            ExperimentError::Json(_) => "SchemaError",
            _ => "ValidationError",
        }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// A command with its documented parameters and their defaults.
#[derive(Debug, Clone, Copy)]
pub struct CommandSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [(&'static str, &'static str)],
}

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "sprinkle-height",
        summary: "longest chains of sprinkled cubes or causal diamonds",
        params: &[
            ("model", "cube"),
            ("d", "2"),
            ("n", "10000"),
            ("replicas", "50"),
            ("mode", "binomial"),
        ],
    },
    CommandSpec {
        name: "sprinkle-points",
        summary: "one sprinkling, exported as a point table",
        params: &[("model", "diamond"), ("d", "2"), ("n", "1000"), ("mode", "poisson")],
    },
    CommandSpec {
        name: "csg-grow",
        summary: "sequential growth with JSON weight parameters (or @file)",
        params: &[
            ("params", r#"{"kind":"transitive_percolation","p":0.5}"#),
            ("n", "64"),
            ("replicas", "20"),
        ],
    },
    CommandSpec {
        name: "covariance-check",
        summary: "general covariance and Bell causality over all small posets",
        params: &[
            ("params", ""),
            ("max_size", "4"),
            ("sequences", "5"),
            ("eps", "0.01"),
            ("tol", "1e-12"),
        ],
    },
    CommandSpec {
        name: "ladder-invariance",
        summary: "stem probabilities of the ladder: Monte Carlo, exact and finite-n",
        params: &[
            ("stems", "a1,a2;a2,a1"),
            ("replicas", "1000000"),
            ("finite_n", "20"),
            ("dlr_k", "0"),
            ("dlr_n", "8"),
            ("dlr_stem", "3"),
        ],
    },
    CommandSpec {
        name: "swappable",
        summary: "swappable pairs of uniform 2-dimensional orders",
        params: &[("n", "1000"), ("replicas", "10000")],
    },
    CommandSpec {
        name: "rgo-limit",
        summary: "tuned random graph orders against the semiorder poson",
        params: &[
            ("n", "500"),
            ("c", "0.5"),
            ("replicas", "10"),
            ("samples", "20000"),
            ("check_n", "60"),
        ],
    },
    CommandSpec {
        name: "post-frequency",
        summary: "bulk post frequency of random graph orders",
        params: &[("p", "0.5"), ("n", "2000"), ("replicas", "50")],
    },
    CommandSpec {
        name: "midpoint-dim",
        summary: "midpoint estimator of 2^-d",
        params: &[("model", "cube"), ("d", "2"), ("n", "10000"), ("replicas", "1")],
    },
    CommandSpec {
        name: "density-table",
        summary: "densities of all poset classes of size at most 4",
        params: &[
            ("model", "rgo"),
            ("n", "200"),
            ("p", "0.1"),
            ("c", "0.5"),
            ("d", "2"),
            ("replicas", "10"),
            ("samples", "20000"),
        ],
    },
    CommandSpec {
        name: "quadrant-q",
        summary: "exploratory bottom-element probabilities in growing squares",
        params: &[("sides", "2,4,6"), ("max_points", "20"), ("replicas", "200")],
    },
];

pub fn command_spec(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        ExperimentConfig {
            command: command.to_string(),
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Parses `key=value` arguments.
    pub fn parse_params<I, S>(command: &str, seed: u64, args: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut cfg = ExperimentConfig::new(command, seed);
        for a in args {
            let (k, v) = a
                .as_ref()
                .split_once('=')
                .ok_or_else(|| ExperimentError::Schema(format!("expected key=value, got {:?}", a.as_ref())))?;
            cfg.params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub replicas: usize,
}

fn stat(name: impl Into<String>, value: f64, stderr: f64, replicas: usize) -> Statistic {
    Statistic {
        name: name.into(),
        value,
        stderr: stderr.is_finite().then_some(stderr),
        replicas,
    }
}

fn exact(name: impl Into<String>, value: f64) -> Statistic {
    stat(name, value, f64::NAN, 0)
}

/// A rectangular result, written as-is in CSV mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub statistics: Vec<Statistic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    #[serde(default)]
    pub extra: Value,
    pub wall_time_seconds: f64,
    pub version: String,
}

impl ExperimentRecord {
    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.statistic(name).map(|s| s.value)
    }

    pub fn write<W: Write>(&self, format: OutputFormat, mut out: W) -> std::io::Result<()> {
        match format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)
            }
            OutputFormat::Csv => {
                let (columns, rows) = match &self.table {
                    Some(t) => (t.columns.clone(), t.rows.clone()),
                    None => (
                        ["statistic", "value", "stderr", "replicas"].map(String::from).to_vec(),
                        self.statistics
                            .iter()
                            .map(|s| {
                                vec![
                                    s.name.clone(),
                                    format!("{:?}", s.value),
                                    s.stderr.map_or(String::new(), |e| format!("{e:?}")),
                                    s.replicas.to_string(),
                                ]
                            })
                            .collect(),
                    ),
                };
                writeln!(out, "{}", csv_line(&columns))?;
                for r in rows {
                    writeln!(out, "{}", csv_line(&r))?;
                }
                Ok(())
            }
        }
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Typed access to `key=value` parameters, with defaults from the command spec.
struct Params<'a> {
    spec: &'static CommandSpec,
    given: &'a BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    fn new(spec: &'static CommandSpec, given: &'a BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = given.keys().find(|k| !spec.params.iter().any(|(p, _)| p == k)) {
            let known: Vec<&str> = spec.params.iter().map(|(p, _)| *p).collect();
            return Err(ExperimentError::Schema(format!(
                "{} takes no parameter {k:?} (known: {})",
                spec.name,
                known.join(", ")
            )));
        }
        Ok(Params { spec, given })
    }

    fn str(&self, key: &str) -> &str {
        self.given.get(key).map(String::as_str).unwrap_or_else(|| {
            self.spec
                .params
                .iter()
                .find(|(p, _)| *p == key)
                .map(|(_, d)| *d)
                .expect("parameter declared in the command spec")
        })
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let s = self.str(key);
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ExperimentError::Schema(format!("{key}={s:?} is not a finite number")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let s = self.str(key);
        s.parse::<usize>()
            .ok()
            .or_else(|| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v <= u32::MAX as f64)
                    .map(|v| v as usize)
            })
            .ok_or_else(|| ExperimentError::Schema(format!("{key}={s:?} is not a non-negative integer")))
    }

    fn positive(&self, key: &str) -> Result<usize> {
        let v = self.usize(key)?;
        if v == 0 {
            return Err(ExperimentError::Validation(format!("{key} must be at least 1")));
        }
        Ok(v)
    }
}

/// Runs one experiment.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    let spec = command_spec(&config.command).ok_or_else(|| ExperimentError::UnknownCommand(config.command.clone()))?;
    let params = Params::new(spec, &config.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = Instant::now();
    let out = match spec.name {
        "sprinkle-height" => sprinkle_height(&params, config.seed, &mut rng)?,
        "sprinkle-points" => sprinkle_points(&params, &mut rng)?,
        "csg-grow" => csg_grow(&params, &mut rng)?,
        "covariance-check" => covariance_check(&params, &mut rng)?,
        "ladder-invariance" => ladder_invariance(&params, &mut rng)?,
        "swappable" => swappable(&params, &mut rng)?,
        "rgo-limit" => rgo_limit(&params, &mut rng)?,
        "post-frequency" => posts(&params, &mut rng)?,
        "midpoint-dim" => midpoint(&params, config.seed, &mut rng)?,
        "density-table" => density_table(&params, &mut rng)?,
        "quadrant-q" => quadrant(&params, &mut rng)?,
        _ => unreachable!("every spec has a runner"),
    };
    Ok(ExperimentRecord {
        command: config.command.clone(),
        params: config.params.clone(),
        seed: config.seed,
        statistics: out.statistics,
        table: out.table,
        extra: out.extra,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        version: VERSION.to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub record: ExperimentRecord,
    pub warnings: Vec<String>,
}

/// Reruns a serialized record and checks that it reproduces exactly.
pub fn replay(text: &str) -> Result<ReplayOutcome> {
    let recorded_value: Value = serde_json::from_str(text)?;
    let recorded: ExperimentRecord = serde_json::from_value(recorded_value.clone())?;
    let mut warnings = Vec::new();
    if recorded.version != VERSION {
        warnings.push(format!(
            "record was written by version {}, replaying with {VERSION}",
            recorded.version
        ));
    }
    let config = ExperimentConfig {
        command: recorded.command.clone(),
        params: recorded.params.clone(),
        seed: recorded.seed,
    };
    let fresh = run(&config)?;
    let fresh_value = serde_json::to_value(&fresh)?;
    let strip = |v: &Value| {
        let mut v = v.clone();
        if let Some(m) = v.as_object_mut() {
            m.remove("wall_time_seconds");
            m.remove("version");
        }
        v
    };
    if let Some((field, expected, actual)) = first_difference(&strip(&recorded_value), &strip(&fresh_value), "") {
        return Err(ExperimentError::ReplayMismatch {
            field,
            expected,
            actual,
        });
    }
    Ok(ReplayOutcome {
        record: fresh,
        warnings,
    })
}

fn first_difference(a: &Value, b: &Value, path: &str) -> Option<(String, String, String)> {
    let here = || {
        if path.is_empty() {
            "<root>".to_string()
        } else {
            path.to_string()
        }
    };
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            // the headline fields first, so a mismatch names the statistic rather than raw data
            const ORDER: [&str; 6] = ["command", "params", "seed", "statistics", "table", "extra"];
            let rank = |k: &str| ORDER.iter().position(|o| *o == k).unwrap_or(ORDER.len());
            let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
            keys.sort_by(|a, b| rank(a).cmp(&rank(b)).then(a.cmp(b)));
            keys.dedup();
            for k in keys {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match (x.get(k), y.get(k)) {
                    (Some(u), Some(v)) => {
                        if let Some(d) = first_difference(u, v, &p) {
                            return Some(d);
                        }
                    }
                    (u, v) => return Some((p, show(u), show(v))),
                }
            }
            None
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                if let Some(d) = first_difference(u, v, &format!("{path}[{i}]")) {
                    return Some(d);
                }
            }
            (x.len() != y.len()).then(|| (format!("{}.len", here()), x.len().to_string(), y.len().to_string()))
        }
        _ => (a != b).then(|| (here(), a.to_string(), b.to_string())),
    }
}

fn show(v: Option<&Value>) -> String {
    v.map_or("<missing>".to_string(), Value::to_string)
}

#[derive(Default)]
struct Output {
    statistics: Vec<Statistic>,
    table: Option<Table>,
    extra: Value,
}

fn region_for(model: &str, d: usize) -> Result<Region> {
    match model {
        "cube" => Ok(Region::cube(d)?),
        "diamond" => Ok(Region::unit_diamond(d)?),
        other => Err(ExperimentError::Schema(format!(
            "model must be cube or diamond, got {other:?}"
        ))),
    }
}

fn mode_for(s: &str) -> Result<SprinkleMode> {
    match s {
        "binomial" => Ok(SprinkleMode::Binomial),
        "poisson" => Ok(SprinkleMode::Poisson),
        other => Err(ExperimentError::Schema(format!(
            "mode must be binomial or poisson, got {other:?}"
        ))),
    }
}

fn sprinkle_height(p: &Params, seed: u64, rng: &mut ChaCha8Rng) -> Result<Output> {
    let model = p.str("model");
    let d = p.usize("d")?;
    let n = p.f64("n")?;
    let replicas = p.positive("replicas")?;
    let region = region_for(model, d)?;
    let mode = mode_for(p.str("mode"))?;
    sprinkle_region(&region, n.min(1.0), mode, &mut ChaCha8Rng::seed_from_u64(0))?;
    let stream = rng.random::<u64>();
    let chains: Vec<f64> = run_replicas(stream, replicas, |r, _| {
        let s = sprinkle_region(&region, n, mode, r).expect("validated region and intensity");
        s.longest_chain_len() as f64
    });
    let s = summarize(&chains);
    let scale = n.powf(1.0 / d as f64);
    let mut stats = vec![
        stat("mean_chain_length", s.mean, s.stderr, replicas),
        stat("sd_chain_length", s.sd, f64::NAN, replicas),
        stat("mean_height", s.mean - 1.0, s.stderr, replicas),
        stat("scaled_chain_length", s.mean / scale, s.stderr / scale, replicas),
    ];
    if model == "cube" && d == 2 {
        stats.push(exact(
            "tracy_widom_prediction",
            2.0 * n.sqrt() + TRACY_WIDOM_MEAN * n.powf(1.0 / 6.0),
        ));
    }
    let rows: Vec<SprinkleStat> = stats
        .iter()
        .map(|st| SprinkleStat {
            model: model.to_string(),
            d,
            n,
            seed,
            statistic: st.name.clone(),
            value: st.value,
            stderr: st.stderr.unwrap_or(0.0),
        })
        .collect();
    Ok(Output {
        statistics: stats,
        table: None,
        extra: json!({ "chain_lengths": chains, "sprinkle_stats": rows }),
    })
}

fn sprinkle_points(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let d = p.usize("d")?;
    let region = region_for(p.str("model"), d)?;
    let s = sprinkle_region(&region, p.f64("n")?, mode_for(p.str("mode"))?, rng)?;
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("ascii output");
    let mut lines = text.lines();
    let columns = lines.next().unwrap_or("").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    let chain = s.longest_chain();
    Ok(Output {
        statistics: vec![
            exact("points", s.len() as f64),
            exact("longest_chain_length", chain.len() as f64),
        ],
        table: Some(Table { columns, rows }),
        extra: json!({ "longest_chain": chain }),
    })
}

fn csg_params(raw: &str) -> Result<CsgParams> {
    let text = match raw.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => raw.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| ExperimentError::Validation(format!("growth parameters: {e}")))
}

fn csg_grow(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let params = csg_params(p.str("params"))?;
    let n = p.usize("n")?;
    let replicas = p.positive("replicas")?;
    let stream = rng.random::<u64>();
    let grown: Vec<Poset> = run_replicas(stream, replicas, |r, _| grow(&params, n, r).map(|g| g.poset().clone()))
        .into_iter()
        .collect::<std::result::Result<_, _>>()?;
    let summary = |f: &dyn Fn(&Poset) -> f64| summarize(&grown.iter().map(f).collect::<Vec<_>>());
    let pairs = (n * n.saturating_sub(1) / 2).max(1) as f64;
    let mut stats = Vec::new();
    for (name, s) in [
        ("comparable_fraction", summary(&|q| q.comparable_count() as f64 / pairs)),
        ("height", summary(&|q| q.height() as f64)),
        ("posts", summary(&|q| q.find_posts().len() as f64)),
        ("links", summary(&|q| q.cover_count() as f64)),
        ("minimal_elements", summary(&|q| q.minimal().len() as f64)),
    ] {
        stats.push(stat(name, s.mean, s.stderr, replicas));
    }
    Ok(Output {
        statistics: stats,
        table: None,
        extra: json!({ "params": params, "first_poset": grown[0].to_json() }),
    })
}

fn covariance_check(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let max_size = p.positive("max_size")?;
    let eps = p.f64("eps")?;
    let tol = p.f64("tol")?;
    let param_sets: Vec<CsgParams> = if p.str("params").is_empty() {
        (0..p.positive("sequences")?)
            .map(|_| {
                let t = std::iter::once(1.0)
                    .chain((0..max_size).map(|_| 0.05 + 2.95 * rng.random::<f64>()))
                    .collect();
                CsgParams::explicit(t)
            })
            .collect::<std::result::Result<_, _>>()?
    } else {
        vec![csg_params(p.str("params"))?]
    };
    let posets: Vec<Poset> = (1..=max_size)
        .map(naturally_labelled_posets)
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let (mut cov, mut bell, mut exact_ok) = (0f64, 0f64, true);
    let (mut neg_cov, mut neg_bell) = (0f64, 0f64);
    for params in &param_sets {
        let perturbed =
            |m: usize, b: usize, c: usize| Ok(shape_probability(m, b, c, params)? * (1.0 + eps * (m * c) as f64));
        for q in &posets {
            cov = cov.max(check_general_covariance(q, params)?);
            exact_ok &= num_traits::Zero::is_zero(&check_general_covariance_exact(q, params)?);
            neg_cov = neg_cov.max(check_general_covariance_with(q, perturbed)?);
            let ds = down_sets(q)?;
            for s1 in &ds {
                for s2 in &ds {
                    bell = bell.max(bell_residual(q, s1, s2, |m, b, c| shape_probability(m, b, c, params))?);
                    neg_bell = neg_bell.max(bell_residual(q, s1, s2, perturbed)?);
                }
            }
        }
    }
    let stats = vec![
        exact("posets_checked", posets.len() as f64),
        exact("parameter_sets", param_sets.len() as f64),
        exact("max_covariance_deviation", cov),
        exact("exact_covariance_holds", if exact_ok { 1.0 } else { 0.0 }),
        exact("max_bell_residual", bell),
        exact("negative_control_covariance", neg_cov),
        exact("negative_control_bell", neg_bell),
    ];
    if cov >= tol || bell >= tol || !exact_ok {
        return Err(ExperimentError::Validation(format!(
            "covariance deviation {cov:e}, Bell residual {bell:e} (tolerance {tol:e})"
        )));
    }
    if eps != 0.0 && (neg_cov < tol || neg_bell < tol) {
        return Err(ExperimentError::Validation("perturbed rule was not detected".into()));
    }
    Ok(Output {
        statistics: stats,
        table: None,
        extra: json!({ "params": param_sets }),
    })
}

fn ladder_invariance(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let replicas = p.positive("replicas")?;
    let finite_n = p.usize("finite_n")?;
    let stems: Vec<OrderedStem> = p
        .str("stems")
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()?;
    if stems.is_empty() {
        return Err(ExperimentError::Schema("stems is empty".into()));
    }
    let mut stats = Vec::new();
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for stem in &stems {
        let mc = stem_probability_mc(stem, replicas, rng)?;
        let mu = ladder_stem_probability(stem)?;
        let finite = if finite_n >= stem.0.iter().max().map_or(0, |m| m + 1) && finite_n > 0 {
            let v = finite_uniform_stem_probability(&ladder_poset(finite_n), stem)?;
            num_traits::ToPrimitive::to_f64(&v)
        } else {
            None
        };
        stats.push(stat(format!("mc:{stem}"), mc.mean, mc.stderr, replicas));
        stats.push(exact(format!("exact:{stem}"), mu.to_f64()));
        if let Some(f) = finite {
            stats.push(exact(format!("finite:{stem}"), f));
        }
        rows.push(vec![
            stem.to_string(),
            format!("{:?}", mc.mean),
            format!("{:?}", mc.stderr),
            format!("{:?}", mu.to_f64()),
            format!("{}", mu),
            finite.map_or(String::new(), |f| format!("{f:?}")),
        ]);
        estimates.push((stem.clone(), mc));
    }
    for (i, (a, ea)) in estimates.iter().enumerate() {
        for (b, eb) in &estimates[i + 1..] {
            if a.same_set(b) {
                let se = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
                stats.push(stat(
                    format!("pair_z:{a}|{b}"),
                    (ea.mean - eb.mean).abs() / se,
                    f64::NAN,
                    replicas,
                ));
            }
        }
    }
    let dlr_k = p.usize("dlr_k")?;
    let mut extra = json!({});
    if dlr_k > 0 {
        let dlr = dlr_check(p.usize("dlr_n")?, dlr_k, p.positive("dlr_stem")?, replicas, rng)?;
        let worst = dlr
            .iter()
            .map(|r| (r.mean_nu - r.mu).abs() / r.stderr.max(f64::MIN_POSITIVE))
            .filter(|z| z.is_finite())
            .fold(0.0, f64::max);
        stats.push(stat("dlr_max_z", worst, f64::NAN, replicas));
        extra = json!({ "dlr": dlr });
    }
    Ok(Output {
        statistics: stats,
        table: Some(Table {
            columns: ["stem", "mc", "mc_stderr", "exact", "exact_golden", "finite"]
                .map(String::from)
                .to_vec(),
            rows,
        }),
        extra,
    })
}

/// Cells `0..=6` of the swappable-pair histogram, plus everything above.
const SWAP_CELLS: usize = 7;

fn swappable(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let n = p.positive("n")?;
    let replicas = p.positive("replicas")?;
    let stream = rng.random::<u64>();
    let counts: Vec<usize> = run_replicas(stream, replicas, |r, _| {
        swappable_pairs(&PermutationPair::random(n, 2, r)).expect("two permutations")
    });
    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let s = summarize(&values);
    let mut hist = vec![0u64; SWAP_CELLS + 1];
    for &c in &counts {
        hist[c.min(SWAP_CELLS)] += 1;
    }
    let emp: Vec<f64> = hist.iter().map(|&h| h as f64 / replicas as f64).collect();
    let mut pois: Vec<f64> = (0..SWAP_CELLS as u64).map(|k| poisson_pmf(1.0, k)).collect();
    pois.push(1.0 - pois.iter().sum::<f64>());
    Ok(Output {
        statistics: vec![
            stat("mean", s.mean, s.stderr, replicas),
            stat("variance", s.sd * s.sd, f64::NAN, replicas),
            stat("tv_poisson1", total_variation(&emp, &pois), f64::NAN, replicas),
        ],
        table: Some(Table {
            columns: ["count", "frequency", "poisson1"].map(String::from).to_vec(),
            rows: (0..=SWAP_CELLS)
                .map(|k| {
                    let label = if k == SWAP_CELLS {
                        format!("{k}+")
                    } else {
                        k.to_string()
                    };
                    vec![label, format!("{:?}", emp[k]), format!("{:?}", pois[k])]
                })
                .collect(),
        }),
        extra: json!({ "histogram": hist }),
    })
}

fn rgo_limit(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let n = p.positive("n")?;
    let c = p.f64("c")?;
    let table = rgo_semiorder_limit_experiment(n, c, p.positive("replicas")?, p.positive("samples")?, rng)?;
    let poson = SemiorderPoson::new(c)?;
    let check_n = p.usize("check_n")?;
    let checks = 20usize;
    let semiorders = (0..checks)
        .filter(|_| check_n == 0 || is_semiorder(&sample_from_poson(&poson, check_n, rng).expect("n ≥ 1")))
        .count();
    let max_gap = table.rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    Ok(Output {
        statistics: vec![
            exact("p", table.p),
            stat("h_density", table.h_density.0, table.h_density.1, table.replicas),
            stat("l_density", table.l_density.0, table.l_density.1, table.replicas),
            stat("max_abs_gap", max_gap, f64::NAN, table.replicas),
            exact("poson_semiorder_fraction", semiorders as f64 / checks as f64),
        ],
        table: Some(Table {
            columns: [
                "class_id",
                "representative_relations",
                "t_rgo",
                "t_poson",
                "gap",
                "stderr",
            ]
            .map(String::from)
            .to_vec(),
            rows: table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.class_id.clone(),
                        r.representative_relations.clone(),
                        format!("{:?}", r.t_rgo),
                        format!("{:?}", r.t_poson),
                        format!("{:?}", r.gap),
                        if r.stderr.is_finite() {
                            format!("{:?}", r.stderr)
                        } else {
                            String::new()
                        },
                    ]
                })
                .collect(),
        }),
        extra: json!({}),
    })
}

fn posts(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let prob = p.f64("p")?;
    let est = post_frequency(prob, p.positive("n")?, p.positive("replicas")?, rng)?;
    let asym = post_probability_asymptotic(prob);
    Ok(Output {
        statistics: vec![
            stat("frequency", est.frequency, est.stderr, est.replicas),
            exact("asymptotic", asym),
            stat("ratio", est.frequency / asym, est.stderr / asym, est.replicas),
        ],
        table: None,
        extra: json!({ "per_replica": est.per_replica }),
    })
}

fn midpoint(p: &Params, seed: u64, rng: &mut ChaCha8Rng) -> Result<Output> {
    let model = p.str("model");
    let d = p.usize("d")?;
    let n = p.f64("n")?;
    let replicas = p.positive("replicas")?;
    let region = region_for(model, d)?;
    let stream = rng.random::<u64>();
    let values: Vec<f64> = run_replicas(stream, replicas, |r, _| {
        sprinkle_region(&region, n, SprinkleMode::Binomial, r).and_then(|s| midpoint_dimension_stat(&s))
    })
    .into_iter()
    .collect::<std::result::Result<_, _>>()?;
    let s = summarize(&values);
    let target = 0.5f64.powi(d as i32);
    let stats = vec![
        stat("estimate", s.mean, s.stderr, replicas),
        exact("target", target),
        stat(
            "dimension",
            -s.mean.log2(),
            s.stderr / (s.mean * std::f64::consts::LN_2),
            replicas,
        ),
    ];
    let rows: Vec<SprinkleStat> = stats
        .iter()
        .map(|st| SprinkleStat {
            model: model.to_string(),
            d,
            n,
            seed,
            statistic: st.name.clone(),
            value: st.value,
            stderr: st.stderr.unwrap_or(0.0),
        })
        .collect();
    Ok(Output {
        statistics: stats,
        table: None,
        extra: json!({ "sprinkle_stats": rows }),
    })
}

fn density_table(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let model = p.str("model").to_string();
    let n = p.positive("n")?;
    let replicas = p.positive("replicas")?;
    let samples = p.positive("samples")?;
    let prob = p.f64("p")?;
    let d = p.usize("d")?;
    let poson = SemiorderPoson::new(p.f64("c")?)?;
    let sample = |r: &mut crate::rng::ReplicaRng| -> Result<Poset> {
        Ok(match model.as_str() {
            "rgo" => crate::growth::random_graph_order(n, prob, r)?.poset().clone(),
            "poson" => sample_from_poson(&poson, n, r)?,
            "kd" => random_kd_order(n, d, r)?,
            "cube" => sprinkle_region(&Region::cube(d)?, n as f64, SprinkleMode::Binomial, r)?.order()?,
            other => {
                return Err(ExperimentError::Schema(format!(
                    "model must be rgo, poson, kd or cube, got {other:?}"
                )))
            }
        })
    };
    sample(&mut crate::rng::replica_rng(0, 0))?;
    let tables = class_tables();
    let stream = rng.random::<u64>();
    let profiles: Vec<Vec<Vec<f64>>> = run_replicas(stream, replicas, |r, _| {
        let q = sample(r).expect("validated model");
        sampled_profile(&tables, &q, samples, r)
    });
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for (ti, t) in tables.iter().enumerate() {
        for (ci, rep) in t.representatives().iter().enumerate() {
            let vals: Vec<f64> = profiles.iter().map(|pr| pr[ti][ci]).collect();
            let s = summarize(&vals);
            let id = format!("k{}_{ci}", t.k());
            stats.push(stat(id.clone(), s.mean, s.stderr, replicas));
            rows.push(vec![
                id,
                t.k().to_string(),
                relations_string(rep),
                format!("{:?}", s.mean),
                if s.stderr.is_finite() {
                    format!("{:?}", s.stderr)
                } else {
                    String::new()
                },
            ]);
        }
    }
    Ok(Output {
        statistics: stats,
        table: Some(Table {
            columns: ["class_id", "size", "representative_relations", "density", "stderr"]
                .map(String::from)
                .to_vec(),
            rows,
        }),
        extra: json!({}),
    })
}

fn quadrant(p: &Params, rng: &mut ChaCha8Rng) -> Result<Output> {
    let sides: Vec<f64> = p
        .str("sides")
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| ExperimentError::Schema(format!("sides: {e}")))?;
    let max_points = p.usize("max_points")?;
    let replicas = p.positive("replicas")?;
    let stream = rng.random::<u64>();
    let runs = run_replicas(stream, replicas, |r, _| {
        quadrant_bottom_probabilities(&sides, max_points, r)
    })
    .into_iter()
    .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut stats = Vec::new();
    for (i, side) in sides.iter().enumerate() {
        let qs: Vec<f64> = runs.iter().filter_map(|rows| rows[i].q).collect();
        if !qs.is_empty() {
            let s = summarize(&qs);
            stats.push(stat(format!("q:{side}"), s.mean, s.stderr, qs.len()));
        }
    }
    Ok(Output {
        statistics: stats,
        table: None,
        extra: json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(command: &str) -> ExperimentConfig {
        ExperimentConfig::new(command, 7)
    }

    #[test]
    fn every_command_runs_at_small_size() {
        let cases = [
            small("sprinkle-height").with("n", 300).with("replicas", 4),
            small("sprinkle-points").with("n", 50),
            small("csg-grow").with("n", 12).with("replicas", 3),
            small("covariance-check").with("max_size", 3).with("sequences", 1),
            small("ladder-invariance")
                .with("replicas", 2000)
                .with("finite_n", 8)
                .with("dlr_k", 2)
                .with("dlr_stem", 2),
            small("swappable").with("n", 50).with("replicas", 50),
            small("rgo-limit")
                .with("n", 60)
                .with("replicas", 2)
                .with("samples", 200)
                .with("check_n", 10),
            small("post-frequency").with("n", 200).with("replicas", 2),
            small("midpoint-dim").with("n", 300),
            small("density-table")
                .with("n", 30)
                .with("replicas", 2)
                .with("samples", 100),
            small("quadrant-q").with("replicas", 3).with("max_points", 12),
        ];
        assert_eq!(cases.len(), COMMANDS.len());
        for cfg in cases {
            let rec = run(&cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.command));
            assert!(
                !rec.statistics.is_empty() || cfg.command == "quadrant-q",
                "{}",
                cfg.command
            );
            let text = serde_json::to_string(&rec).unwrap();
            let back = replay(&text).unwrap_or_else(|e| panic!("{}: {e}", cfg.command));
            assert!(back.warnings.is_empty());
        }
    }

    #[test]
    fn schema_and_unknown_command_errors() {
        let e = run(&small("no-such-command")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(&small("swappable").with("bogus", 1)).unwrap_err();
        assert!(matches!(e, ExperimentError::Schema(_)));
        let e = run(&small("swappable").with("n", "ten")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(&small("sprinkle-height").with("d", 0)).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(ExperimentConfig::parse_params("swappable", 0, ["n"]).is_err());
    }

    #[test]
    fn replay_detects_tampering_and_tolerates_version() {
        let rec = run(&small("swappable").with("n", 40).with("replicas", 30)).unwrap();
        let mut v = serde_json::to_value(&rec).unwrap();
        v["version"] = json!("0.0.0-other");
        v["wall_time_seconds"] = json!(123.0);
        let out = replay(&v.to_string()).unwrap();
        assert_eq!(out.warnings.len(), 1);
        v["seed"] = json!(8);
        match replay(&v.to_string()).unwrap_err() {
            ExperimentError::ReplayMismatch { field, .. } => assert!(field.starts_with("statistics"), "{field}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn floats_round_trip_exactly() {
        let rec = run(&small("post-frequency").with("n", 150).with("replicas", 3)).unwrap();
        let back: ExperimentRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        for (a, b) in rec.statistics.iter().zip(&back.statistics) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn csv_output_quotes_names() {
        let rec = run(&small("ladder-invariance").with("replicas", 100).with("finite_n", 0)).unwrap();
        let mut buf = Vec::new();
        rec.write(OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stem,mc,mc_stderr,exact,exact_golden,finite\n"));
        assert!(text.contains("\"a1,a2\","));
    }
}
