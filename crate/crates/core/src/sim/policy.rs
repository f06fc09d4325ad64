//! Ranking policies run inside the feedback loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::dual::{DualParams, DualState};
use crate::error::{Error, Result};
use crate::mf::EmbeddingState;
use crate::ranker::{top_k_of, Ranker, RankingDecision, RewardParts};
use crate::sim::world::ScoreMatrix;
use crate::ucb::UcbParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Accuracy + exploration + dual fairness.
    LtpMmf,
    LtpMmfNoUcb,
    LtpMmfNoFair,
    /// Accuracy only.
    #[serde(rename = "topk")]
    TopK,
    /// Accuracy restricted to the least-exposed providers.
    KNeighbor,
    /// Top-K on the true scores; test reference, not a learning policy.
    OracleGreedy,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::LtpMmf,
        PolicyKind::LtpMmfNoUcb,
        PolicyKind::LtpMmfNoFair,
        PolicyKind::TopK,
        PolicyKind::KNeighbor,
        PolicyKind::OracleGreedy,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PolicyKind::LtpMmf => "ltp_mmf",
            PolicyKind::LtpMmfNoUcb => "ltp_mmf_no_ucb",
            PolicyKind::LtpMmfNoFair => "ltp_mmf_no_fair",
            PolicyKind::TopK => "topk",
            PolicyKind::KNeighbor => "k_neighbor",
            PolicyKind::OracleGreedy => "oracle_greedy",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub dual: DualParams,
    pub ucb: UcbParams,
    pub penalty: f64,
    /// Number of least-exposed providers the k-neighbor policy draws from.
    pub neighbors: usize,
}

/// Read-only view of the loop handed to a policy at every arrival.
pub struct StepContext<'a> {
    pub emb: &'a EmbeddingState,
    pub catalog: &'a Catalog,
    /// 1-based episode counter.
    pub episode: u64,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    /// Called before the first arrival of every episode.
    fn begin_episode(&mut self, catalog: &Catalog);

    fn rank(&mut self, user: usize, ctx: &StepContext<'_>) -> Result<RankingDecision>;
}

struct LtpMmfPolicy {
    kind: PolicyKind,
    ranker: Ranker,
    dual: DualState,
}

impl Policy for LtpMmfPolicy {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn begin_episode(&mut self, catalog: &Catalog) {
        self.dual.reset(catalog.gamma());
    }

    fn rank(&mut self, user: usize, ctx: &StepContext<'_>) -> Result<RankingDecision> {
        self.ranker
            .rank_step(user, ctx.emb, &mut self.dual, ctx.catalog, ctx.episode)
    }
}

struct KNeighborPolicy {
    neighbors: usize,
    cumulative: Vec<f64>,
    scores: Vec<f64>,
}

impl Policy for KNeighborPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::KNeighbor
    }

    fn begin_episode(&mut self, catalog: &Catalog) {
        self.cumulative.resize(catalog.n_providers(), 0.0);
    }

    fn rank(&mut self, user: usize, ctx: &StepContext<'_>) -> Result<RankingDecision> {
        let catalog = ctx.catalog;
        let k = catalog.ranking_size();
        self.scores.resize(catalog.n_items(), 0.0);
        ctx.emb.predict_all(user, &mut self.scores);

        let mut providers: Vec<usize> = (0..catalog.n_providers()).collect();
        providers.sort_by(|&a, &b| self.cumulative[a].total_cmp(&self.cumulative[b]).then(a.cmp(&b)));
        let mut candidates = Vec::new();
        for (rank, &p) in providers.iter().enumerate() {
            if rank >= self.neighbors && candidates.len() >= k {
                break;
            }
            candidates.extend_from_slice(catalog.items_of(p));
        }
        let items = top_k_of(&self.scores, &mut candidates, k);
        let mut exposure = vec![0.0; catalog.n_providers()];
        catalog.add_exposures(&items, &mut exposure);
        self.cumulative.iter_mut().zip(&exposure).for_each(|(c, e)| *c += e);
        Ok(RankingDecision {
            user,
            rewards_used: items.iter().map(|&i| self.scores[i]).collect(),
            items,
            exposure,
        })
    }
}

struct OracleGreedyPolicy {
    scores: ScoreMatrix,
    order: Vec<usize>,
}

impl Policy for OracleGreedyPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::OracleGreedy
    }

    fn begin_episode(&mut self, _catalog: &Catalog) {}

    fn rank(&mut self, user: usize, ctx: &StepContext<'_>) -> Result<RankingDecision> {
        let row = self.scores.row(user);
        self.order.clear();
        self.order.extend(0..row.len());
        let items = top_k_of(row, &mut self.order, ctx.catalog.ranking_size());
        let mut exposure = vec![0.0; ctx.catalog.n_providers()];
        ctx.catalog.add_exposures(&items, &mut exposure);
        Ok(RankingDecision {
            user,
            rewards_used: items.iter().map(|&i| row[i]).collect(),
            items,
            exposure,
        })
    }
}

/// Builds a policy. `true_scores` is only consulted by
/// [`PolicyKind::OracleGreedy`].
pub fn make_policy(
    kind: PolicyKind,
    params: &PolicyParams,
    catalog: &Catalog,
    true_scores: Option<&ScoreMatrix>,
) -> Result<Box<dyn Policy>> {
    let parts = match kind {
        PolicyKind::LtpMmf => RewardParts {
            exploration: true,
            fairness: true,
        },
        PolicyKind::LtpMmfNoUcb => RewardParts {
            exploration: false,
            fairness: true,
        },
        PolicyKind::LtpMmfNoFair => RewardParts {
            exploration: true,
            fairness: false,
        },
        PolicyKind::TopK => RewardParts {
            exploration: false,
            fairness: false,
        },
        PolicyKind::KNeighbor => {
            if params.neighbors == 0 {
                return Err(Error::InvalidParameter {
                    name: "neighbors",
                    reason: "must be at least 1".into(),
                });
            }
            return Ok(Box::new(KNeighborPolicy {
                neighbors: params.neighbors,
                cumulative: vec![0.0; catalog.n_providers()],
                scores: Vec::new(),
            }));
        }
        PolicyKind::OracleGreedy => {
            let scores = true_scores.ok_or_else(|| Error::InvalidParameter {
                name: "policy",
                reason: "oracle_greedy needs the true score matrix".into(),
            })?;
            return Ok(Box::new(OracleGreedyPolicy {
                scores: scores.clone(),
                order: Vec::new(),
            }));
        }
    };
    Ok(Box::new(LtpMmfPolicy {
        kind,
        ranker: Ranker::new(parts, params.ucb, params.penalty)?,
        dual: DualState::new(catalog.gamma(), params.dual)?,
    }))
}
