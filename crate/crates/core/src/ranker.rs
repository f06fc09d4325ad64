//! Reward assembly and masked top-K selection.
//!
//! For an arriving user `u` the reward of item `i` owned by provider `p` is
//!
//! ```text
//! r_i = s_hat(u, i) / T - (mu_p + m_p) + df(u, i)
//! ```
//!
//! where `m_p` is a large penalty once provider `p` has no budget left. The
//! decision is the K items with the largest reward.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::dual::DualState;
use crate::error::{Error, Result};
use crate::mf::EmbeddingState;
use crate::ucb::{confidence_radii, BonusWeights, UcbParams};

pub const DEFAULT_PENALTY: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDecision {
    pub user: usize,
    /// K distinct items, best reward first.
    pub items: Vec<usize>,
    pub rewards_used: Vec<f64>,
    pub exposure: Vec<f64>,
}

/// `m_p = 0` while provider `p` has budget left, `penalty` afterwards.
pub fn mask_vector(beta_remaining: &[f64], penalty: f64) -> Vec<f64> {
    beta_remaining
        .iter()
        .map(|&b| if b > 0.0 { 0.0 } else { penalty })
        .collect()
}

pub fn assemble_rewards(
    s_hat: &[f64],
    delta_f: &[f64],
    mu: &[f64],
    mask: &[f64],
    catalog: &Catalog,
) -> Vec<f64> {
    let mut out = vec![0.0; s_hat.len()];
    let price: Vec<f64> = mu.iter().zip(mask).map(|(m, k)| m + k).collect();
    fill_rewards(s_hat, Some(delta_f), Some(&price), catalog, &mut out);
    out
}

fn fill_rewards(
    s_hat: &[f64],
    delta_f: Option<&[f64]>,
    price: Option<&[f64]>,
    catalog: &Catalog,
    out: &mut [f64],
) {
    let inv_t = 1.0 / catalog.batch_size() as f64;
    for (i, r) in out.iter_mut().enumerate() {
        let mut v = s_hat[i] * inv_t;
        if let Some(price) = price {
            v -= price[catalog.provider_of(i)];
        }
        if let Some(df) = delta_f {
            v += df[i];
        }
        *r = v;
    }
}

/// Descending reward, ties broken by the lower item index.
#[inline]
fn rank_order(rewards: &[f64], a: usize, b: usize) -> Ordering {
    rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b))
}

/// Indices of the `k` largest rewards, best first.
pub fn top_k(rewards: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > rewards.len() {
        return Err(Error::RankingTooLarge {
            k,
            n_items: rewards.len(),
        });
    }
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    Ok(top_k_of(rewards, &mut idx, k))
}

/// Top-`k` restricted to the candidate indices in `idx` (reordered in place).
pub(crate) fn top_k_of(rewards: &[f64], idx: &mut [usize], k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(rewards, a, b));
    }
    let head = &mut idx[..k];
    head.sort_unstable_by(|&a, &b| rank_order(rewards, a, b));
    head.to_vec()
}

/// Which reward components are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardParts {
    pub exploration: bool,
    pub fairness: bool,
}

/// One arrival of the online loop, with reusable scratch buffers.
#[derive(Debug, Clone)]
pub struct Ranker {
    parts: RewardParts,
    ucb: UcbParams,
    penalty: f64,
    scores: Vec<f64>,
    bonus: Vec<f64>,
    rewards: Vec<f64>,
    order: Vec<usize>,
}

impl Ranker {
    pub fn new(parts: RewardParts, ucb: UcbParams, penalty: f64) -> Result<Self> {
        if parts.exploration {
            ucb.validate()?;
        }
        if !(penalty.is_finite() && penalty > 0.0) {
            return Err(Error::InvalidParameter {
                name: "penalty",
                reason: format!("must be positive and finite, got {penalty}"),
            });
        }
        Ok(Self {
            parts,
            ucb,
            penalty,
            scores: Vec::new(),
            bonus: Vec::new(),
            rewards: Vec::new(),
            order: Vec::new(),
        })
    }

    pub fn parts(&self) -> RewardParts {
        self.parts
    }

    /// Scores, exploration bonus, mask, rewards and top-K for `user`, then the
    /// dual update (budgets, ideal exposure, momentum, mirror step).
    ///
    /// `episode` is the 1-based episode counter used by the exploration bonus.
    pub fn rank_step(
        &mut self,
        user: usize,
        emb: &EmbeddingState,
        dual: &mut DualState,
        catalog: &Catalog,
        episode: u64,
    ) -> Result<RankingDecision> {
        let n = catalog.n_items();
        if user >= emb.n_users() {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: user,
                len: emb.n_users(),
            });
        }
        if emb.n_items() != n {
            return Err(Error::Shape(format!(
                "embedding state has {} items, catalog {}",
                emb.n_items(),
                n
            )));
        }
        self.scores.resize(n, 0.0);
        self.rewards.resize(n, 0.0);
        emb.predict_all(user, &mut self.scores);

        let bonus = if self.parts.exploration {
            self.bonus.resize(n, 0.0);
            let w = BonusWeights::at(&self.ucb, episode);
            confidence_radii(emb, user, &w, &mut self.bonus);
            Some(self.bonus.as_slice())
        } else {
            None
        };
        let price = if self.parts.fairness {
            let mask = mask_vector(&dual.beta_remaining, self.penalty);
            Some(dual.mu.iter().zip(&mask).map(|(m, k)| m + k).collect::<Vec<_>>())
        } else {
            None
        };
        fill_rewards(&self.scores, bonus, price.as_deref(), catalog, &mut self.rewards);

        self.order.clear();
        self.order.extend(0..n);
        let items = top_k_of(&self.rewards, &mut self.order, catalog.ranking_size());
        let mut exposure = vec![0.0; catalog.n_providers()];
        catalog.add_exposures(&items, &mut exposure);

        if self.parts.fairness {
            dual.observe_decision(&exposure, catalog.gamma());
        } else {
            dual.consume_resources(&exposure);
        }
        Ok(RankingDecision {
            user,
            rewards_used: items.iter().map(|&i| self.rewards[i]).collect(),
            items,
            exposure,
        })
    }
}
