//! Flat TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults of
//! [`ExperimentConfig::default`]. Unknown keys, type errors and constraint
//! violations are all collected and reported together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::sim::{ExperimentConfig, PolicyKind};

/// Every accepted key with a short description, in manifest order.
pub const KEYS: &[(&str, &str)] = &[
    ("policy", "policy id"),
    ("seed", "base seed; overridden by --seed"),
    ("N", "total arrivals"),
    ("T", "episode length"),
    ("K", "ranking size"),
    ("lambda", "accuracy/fairness trade-off"),
    ("n_users", "synthetic world users"),
    ("n_items", "synthetic world items"),
    ("n_providers", "synthetic world providers"),
    ("true_dim", "dimension of the true embeddings"),
    ("skew", "provider-size skew exponent"),
    ("popularity", "per-item popularity offset scale"),
    ("dim", "learned embedding dimension"),
    ("lambda_u", "user ridge regularizer"),
    ("lambda_i", "item ridge regularizer"),
    ("sigma", "confidence parameter"),
    ("q", "embedding drift rate"),
    ("eps_q", "drift slack"),
    ("momentum", "dual gradient momentum"),
    ("step_size", "dual step size (default 1e-2/sqrt(T))"),
    ("penalty", "score penalty for exhausted providers"),
    ("richness", "budget richness (default 1 + 1/|P|)"),
    ("neighbors", "providers considered by k_neighbor (default K)"),
    ("regret_iterations", "subgradient iterations for regret; 0 disables"),
    ("scores", "score matrix file; replaces the synthetic world"),
    ("providers", "item_id,provider_id file; required with `scores`"),
];

/// Score and provider files that replace the synthetic world.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub scores: PathBuf,
    pub providers: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub data: Option<DataSource>,
}

impl RunConfig {
    /// Effective value of every key, defaults resolved.
    pub fn entries(&self) -> BTreeMap<String, Value> {
        let c = &self.experiment;
        let dual = c.dual_params();
        let params = c.policy_params();
        let richness = c
            .richness
            .unwrap_or_else(|| crate::catalog::default_richness(c.world.n_providers));
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("policy", json!(c.policy.id()));
        put("seed", json!(c.seed));
        put("N", json!(c.n_arrivals));
        put("T", json!(c.batch_size));
        put("K", json!(c.ranking_size));
        put("lambda", json!(c.lambda));
        put("n_users", json!(c.world.n_users));
        put("n_items", json!(c.world.n_items));
        put("n_providers", json!(c.world.n_providers));
        put("true_dim", json!(c.world.true_dim));
        put("skew", json!(c.world.skew));
        put("popularity", json!(c.world.popularity));
        put("dim", json!(c.dim));
        put("lambda_u", json!(c.lambda_u));
        put("lambda_i", json!(c.lambda_i));
        put("sigma", json!(c.sigma));
        put("q", json!(c.q));
        put("eps_q", json!(c.eps_q));
        put("momentum", json!(c.momentum));
        put("step_size", json!(dual.step_size));
        put("penalty", json!(c.penalty));
        put("richness", json!(richness));
        put("neighbors", json!(params.neighbors));
        put("regret_iterations", json!(c.regret_iterations));
        if let Some(d) = &self.data {
            put("scores", json!(d.scores.display().to_string()));
            put("providers", json!(d.providers.display().to_string()));
        }
        m
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| match e {
        Error::Config(v) => Error::Config(v.into_iter().map(|l| format!("{}: {l}", path.display())).collect()),
        other => other,
    })
}

/// Parses configuration text. Relative data paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
    let mut c = ExperimentConfig::default();
    let mut errors = Vec::new();
    let mut scores = None;
    let mut providers = None;

    for (key, value) in &table {
        let k = key.as_str();
        let res = match k {
            "policy" => str_of(value).and_then(|s| s.parse::<PolicyKind>().map_err(|e| e.to_string())).map(|p| c.policy = p),
            "seed" => int_of(value).map(|v| c.seed = v),
            "N" => usize_of(value).map(|v| c.n_arrivals = v),
            "T" => usize_of(value).map(|v| c.batch_size = v),
            "K" => usize_of(value).map(|v| c.ranking_size = v),
            "lambda" => float_of(value).map(|v| c.lambda = v),
            "n_users" => usize_of(value).map(|v| c.world.n_users = v),
            "n_items" => usize_of(value).map(|v| c.world.n_items = v),
            "n_providers" => usize_of(value).map(|v| c.world.n_providers = v),
            "true_dim" => usize_of(value).map(|v| c.world.true_dim = v),
            "skew" => float_of(value).map(|v| c.world.skew = v),
            "popularity" => float_of(value).map(|v| c.world.popularity = v),
            "dim" => usize_of(value).map(|v| c.dim = v),
            "lambda_u" => float_of(value).map(|v| c.lambda_u = v),
            "lambda_i" => float_of(value).map(|v| c.lambda_i = v),
            "sigma" => float_of(value).map(|v| c.sigma = v),
            "q" => float_of(value).map(|v| c.q = v),
            "eps_q" => float_of(value).map(|v| c.eps_q = v),
            "momentum" => float_of(value).map(|v| c.momentum = v),
            "step_size" => float_of(value).map(|v| c.step_size = Some(v)),
            "penalty" => float_of(value).map(|v| c.penalty = v),
            "richness" => float_of(value).map(|v| c.richness = Some(v)),
            "neighbors" => usize_of(value).map(|v| c.neighbors = Some(v)),
            "regret_iterations" => usize_of(value).map(|v| c.regret_iterations = v),
            "scores" => str_of(value).map(|s| scores = Some(base.join(s))),
            "providers" => str_of(value).map(|s| providers = Some(base.join(s))),
            _ => Err("unknown key".to_string()),
        };
        if let Err(msg) = res {
            errors.push(format!("{k}: {msg}"));
        }
    }

    let data = match (scores, providers) {
        (Some(scores), Some(providers)) => Some(DataSource { scores, providers }),
        (None, None) => None,
        (Some(_), None) => {
            errors.push("providers: required when `scores` is set".into());
            None
        }
        (None, Some(_)) => {
            errors.push("scores: required when `providers` is set".into());
            None
        }
    };

    // world-shape checks are redone against the loaded data
    let mut check = c.clone();
    if data.is_some() {
        check.world = ExperimentConfig::default().world;
        check.world.n_items = check.world.n_items.max(check.ranking_size);
    }
    errors.extend(check.violations());
    if errors.is_empty() {
        Ok(RunConfig { experiment: c, data })
    } else {
        Err(Error::Config(errors))
    }
}

fn str_of(v: &toml::Value) -> std::result::Result<&str, String> {
    v.as_str().ok_or_else(|| format!("expected a string, got {}", v.type_str()))
}

fn int_of(v: &toml::Value) -> std::result::Result<u64, String> {
    match v.as_integer() {
        Some(i) if i >= 0 => Ok(i as u64),
        Some(i) => Err(format!("must be nonnegative, got {i}")),
        None => Err(format!("expected an integer, got {}", v.type_str())),
    }
}

fn usize_of(v: &toml::Value) -> std::result::Result<usize, String> {
    int_of(v).map(|i| i as usize)
}

fn float_of(v: &toml::Value) -> std::result::Result<f64, String> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {}", other.type_str())),
    }
}
