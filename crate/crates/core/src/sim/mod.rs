//! The recommendation feedback loop.
//!
//! Arrivals are split into episodes of `T` users. Inside an episode the
//! accuracy model is frozen, the policy ranks every arriving user and clicks
//! are drawn from the true scores; only the shown items can be clicked. The
//! episode buffer is fed to the accuracy model before the next episode.

pub mod policy;
pub mod world;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::dual::DualParams;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport};
use crate::mf::{EmbeddingState, Feedback, MfParams};
use crate::oracle::dual_upper_bound;
use crate::ranker::DEFAULT_PENALTY;
use crate::ucb::UcbParams;

pub use policy::{make_policy, Policy, PolicyKind, PolicyParams, StepContext};
pub use world::{generate_synthetic_world, ScoreMatrix, World, WorldParams};

/// One arrival: the shown list and the clicks it received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    /// Global step, starting at 0.
    pub t: usize,
    pub user: usize,
    pub items: Vec<usize>,
    pub clicks: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Total arrivals `N`; `floor(N / T)` episodes are run.
    pub n_arrivals: usize,
    pub batch_size: usize,
    pub ranking_size: usize,
    pub lambda: f64,
    pub world: WorldParams,
    pub dim: usize,
    pub lambda_u: f64,
    pub lambda_i: f64,
    pub sigma: f64,
    pub q: f64,
    pub eps_q: f64,
    pub momentum: f64,
    /// `None` selects `1e-2 / sqrt(T)`.
    pub step_size: Option<f64>,
    pub penalty: f64,
    /// `None` selects `1 + 1/|P|`.
    pub richness: Option<f64>,
    /// Providers considered by `k_neighbor`; `None` selects `K`.
    pub neighbors: Option<usize>,
    /// Subgradient iterations for the per-episode regret bound; 0 disables regret.
    pub regret_iterations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::LtpMmf,
            seed: 0,
            n_arrivals: 8192,
            batch_size: 256,
            ranking_size: 10,
            lambda: 0.5,
            world: WorldParams {
                n_users: 128,
                n_items: 200,
                n_providers: 10,
                true_dim: 16,
                skew: 1.0,
                popularity: 0.0,
            },
            dim: 16,
            lambda_u: 1.0,
            lambda_i: 1.0,
            sigma: 0.1,
            q: 0.8,
            eps_q: 0.01,
            momentum: 0.3,
            step_size: None,
            penalty: DEFAULT_PENALTY,
            richness: None,
            neighbors: None,
            regret_iterations: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn episodes(&self) -> usize {
        self.n_arrivals / self.batch_size.max(1)
    }

    pub fn mf_params(&self) -> MfParams {
        MfParams {
            dim: self.dim,
            lambda_u: self.lambda_u,
            lambda_i: self.lambda_i,
        }
    }

    pub fn ucb_params(&self) -> UcbParams {
        UcbParams {
            sigma: self.sigma,
            q: self.q,
            eps_q: self.eps_q,
            lambda_u: self.lambda_u,
            lambda_i: self.lambda_i,
            dim: self.dim,
        }
    }

    pub fn dual_params(&self) -> DualParams {
        DualParams {
            lambda: self.lambda,
            step_size: self
                .step_size
                .unwrap_or_else(|| DualParams::default_step_size(self.batch_size)),
            momentum: self.momentum,
        }
    }

    pub fn policy_params(&self) -> PolicyParams {
        PolicyParams {
            dual: self.dual_params(),
            ucb: self.ucb_params(),
            penalty: self.penalty,
            neighbors: self.neighbors.unwrap_or(self.ranking_size),
        }
    }

    /// Every violated constraint, one line per key.
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.world.violations();
        if self.batch_size == 0 {
            v.push("T: must be at least 1".into());
        } else if self.n_arrivals < self.batch_size {
            v.push(format!("N: {} arrivals do not fill one episode of T={}", self.n_arrivals, self.batch_size));
        }
        if self.ranking_size == 0 {
            v.push("K: must be at least 1".into());
        } else if self.ranking_size > self.world.n_items {
            v.push(format!("K: {} exceeds n_items={}", self.ranking_size, self.world.n_items));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            v.push(format!("lambda: must be finite and nonnegative, got {}", self.lambda));
        }
        if let Err(e) = self.mf_params().validate() {
            v.push(e.to_string());
        }
        if let Err(e) = self.ucb_params().validate() {
            v.push(e.to_string());
        }
        if self.batch_size > 0 {
            if let Err(e) = self.dual_params().validate() {
                v.push(e.to_string());
            }
        }
        if !(self.penalty.is_finite() && self.penalty > 0.0) {
            v.push(format!("penalty: must be positive, got {}", self.penalty));
        }
        if let Some(r) = self.richness {
            if !(r.is_finite() && r > 0.0) {
                v.push(format!("richness: must be positive, got {r}"));
            }
        }
        if self.neighbors == Some(0) {
            v.push("neighbors: must be at least 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Run-level aggregates, one row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: PolicyKind,
    pub seed: u64,
    pub lambda: f64,
    pub k: usize,
    pub t: usize,
    pub ctr: f64,
    pub mmf: f64,
    pub r: f64,
    pub regret: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub config: ExperimentConfig,
    pub catalog: Catalog,
    pub records: Vec<InteractionRecord>,
    pub reports: Vec<MetricsReport>,
    pub summary: RunSummary,
}

impl ExperimentTrace {
    pub fn lowest_exposure_series(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.lowest_exposure).collect()
    }
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const WORLD_STREAM: u64 = 1;
const EMBEDDING_STREAM: u64 = 2;
const ARRIVAL_STREAM: u64 = 3;
const CLICK_STREAM: u64 = 4;

/// Users arrive in laps over all users; each lap is freshly shuffled.
pub struct ArrivalStream {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl ArrivalStream {
    pub fn new(n_users: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n_users).collect();
        order.shuffle(&mut rng);
        Self { order, pos: 0, rng }
    }

    pub fn take(&mut self, n: usize) -> Vec<usize> {
        (0..n)
            .map(|_| {
                if self.pos == self.order.len() {
                    self.order.shuffle(&mut self.rng);
                    self.pos = 0;
                }
                self.pos += 1;
                self.order[self.pos - 1]
            })
            .collect()
    }
}

/// Runs one episode: every user in `users` is ranked with the frozen
/// accuracy model and clicks are drawn for the shown items.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    policy: &mut dyn Policy,
    world: &World,
    catalog: &Catalog,
    emb: &EmbeddingState,
    users: &[usize],
    episode: u64,
    first_step: usize,
    click_rng: &mut ChaCha8Rng,
) -> Result<Vec<InteractionRecord>> {
    policy.begin_episode(catalog);
    let ctx = StepContext { emb, catalog, episode };
    users
        .iter()
        .enumerate()
        .map(|(k, &user)| {
            let decision = policy.rank(user, &ctx)?;
            let clicks = decision
                .items
                .iter()
                .map(|&i| world.click(user, i, click_rng))
                .collect();
            Ok(InteractionRecord {
                t: first_step + k,
                user,
                items: decision.items,
                clicks,
            })
        })
        .collect()
}

pub fn feedback_of(records: &[InteractionRecord]) -> Vec<Feedback> {
    records
        .iter()
        .flat_map(|r| {
            r.items
                .iter()
                .zip(&r.clicks)
                .map(move |(&i, &c)| Feedback::new(r.user, i, c))
        })
        .collect()
}

/// Episode objective on true scores:
/// `(1/T) sum_t sum_{i in x_t} s + lambda * min_p E_p / gamma_p`.
pub fn episode_objective(records: &[InteractionRecord], scores: &ScoreMatrix, catalog: &Catalog, lambda: f64) -> f64 {
    let mut exposure = vec![0.0; catalog.n_providers()];
    let mut acc = 0.0;
    for r in records {
        catalog.add_exposures(&r.items, &mut exposure);
        acc += r.items.iter().map(|&i| scores.get(r.user, i)).sum::<f64>();
    }
    acc / records.len() as f64 + lambda * metrics::normalized_min_exposure(&exposure, catalog.gamma())
}

/// Upper bound on the episode's regret: dual bound on the offline optimum for
/// the episode's users minus the realized objective.
pub fn episode_regret(
    records: &[InteractionRecord],
    scores: &ScoreMatrix,
    catalog: &Catalog,
    lambda: f64,
    iterations: usize,
) -> f64 {
    let rows: Vec<Vec<f64>> = records.iter().map(|r| scores.row(r.user).to_vec()).collect();
    dual_upper_bound(&rows, catalog, lambda, iterations) - episode_objective(records, scores, catalog, lambda)
}

/// Generates the synthetic world for `config.seed` and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentTrace> {
    config.validate()?;
    let world = generate_synthetic_world(&config.world, sub_seed(config.seed, WORLD_STREAM))?;
    run_experiment_in(config, &world)
}

/// Runs the experiment against a given world; `config.world` is ignored.
pub fn run_experiment_in(config: &ExperimentConfig, world: &World) -> Result<ExperimentTrace> {
    let mut checked = config.clone();
    checked.world.n_users = world.n_users();
    checked.world.n_items = world.n_items();
    checked.world.n_providers = world.provider_of.iter().max().map_or(0, |p| p + 1);
    checked.validate()?;

    let started = Instant::now();
    let t_len = config.batch_size;
    let catalog = Catalog::new(world.provider_of.clone(), config.ranking_size, t_len, config.richness)?;
    let mut emb = EmbeddingState::new(
        world.n_users(),
        world.n_items(),
        config.mf_params(),
        sub_seed(config.seed, EMBEDDING_STREAM),
    )?;
    let mut policy = make_policy(config.policy, &config.policy_params(), &catalog, Some(&world.scores))?;
    let mut arrivals = ArrivalStream::new(world.n_users(), sub_seed(config.seed, ARRIVAL_STREAM));
    let mut click_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, CLICK_STREAM));

    let episodes = config.episodes();
    let mut records = Vec::with_capacity(episodes * t_len);
    for n in 0..episodes {
        let users = arrivals.take(t_len);
        let batch = run_episode(
            policy.as_mut(),
            world,
            &catalog,
            &emb,
            &users,
            n as u64 + 1,
            n * t_len,
            &mut click_rng,
        )?;
        emb.ingest_feedback(&feedback_of(&batch))?;
        records.extend(batch);
    }

    let mut reports = metrics::episode_reports(&records, &world.scores, &catalog, t_len, config.lambda);
    if config.regret_iterations > 0 {
        for (report, chunk) in reports.iter_mut().zip(records.chunks(t_len)) {
            report.regret = Some(episode_regret(
                chunk,
                &world.scores,
                &catalog,
                config.lambda,
                config.regret_iterations,
            ));
        }
    }
    let summary = summarize(config, &reports, started.elapsed().as_secs_f64() * 1e3);
    Ok(ExperimentTrace {
        config: config.clone(),
        catalog,
        records,
        reports,
        summary,
    })
}

/// Aggregates episode reports; every field is a plain mean over episodes.
pub fn summarize(config: &ExperimentConfig, reports: &[MetricsReport], wall_ms: f64) -> RunSummary {
    let n = reports.len().max(1) as f64;
    let ctr = reports.iter().map(|r| r.ctr_at_k).sum::<f64>() / n;
    let mmf = reports.iter().map(|r| r.mmf_at_k).sum::<f64>() / n;
    let regret = if reports.iter().all(|r| r.regret.is_some()) && !reports.is_empty() {
        Some(reports.iter().filter_map(|r| r.regret).sum::<f64>() / n)
    } else {
        None
    };
    RunSummary {
        policy: config.policy,
        seed: config.seed,
        lambda: config.lambda,
        k: config.ranking_size,
        t: config.batch_size,
        ctr,
        mmf,
        r: metrics::r_lambda(ctr, mmf, config.lambda),
        regret,
        wall_ms,
    }
}
