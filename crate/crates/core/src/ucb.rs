//! Exploration bonus for the ranking reward.
//!
//! For a user/item pair the bonus is
//!
//! ```text
//! df = alpha_t * (||v_i||_{A_u^-1} + C_t / 2) + beta_t * (||v_u||_{C_i^-1} + C_t / 2)
//! ```
//!
//! where `alpha_t`, `beta_t` bound the embedding bias and `C_t = (q + eps_q)^t`
//! bounds the collaborative variance. `t` counts episodes (model refreshes),
//! while the Mahalanobis norms read the live ridge statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mf::{mahalanobis, EmbeddingState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbParams {
    /// Confidence level in (0, 1).
    pub sigma: f64,
    /// Linear convergence rate of the embedding optimizer, in (0, 1).
    pub q: f64,
    pub eps_q: f64,
    pub lambda_u: f64,
    pub lambda_i: f64,
    pub dim: usize,
}

impl Default for UcbParams {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            q: 0.8,
            eps_q: 0.01,
            lambda_u: 1.0,
            lambda_i: 1.0,
            dim: 16,
        }
    }
}

impl UcbParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma", format!("must lie in (0, 1), got {}", self.sigma));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad("q", format!("must lie in (0, 1), got {}", self.q));
        }
        if self.eps_q.is_nan() || self.eps_q < 0.0 {
            return bad("eps_q", format!("must be nonnegative, got {}", self.eps_q));
        }
        if self.q + self.eps_q >= 1.0 {
            return bad(
                "eps_q",
                format!("q + eps_q = {} must stay below 1", self.q + self.eps_q),
            );
        }
        if !(self.lambda_u > 0.0 && self.lambda_i > 0.0) {
            return bad("lambda_u", "ridge weights must be positive".into());
        }
        if self.dim == 0 {
            return bad("dim", "must be at least 1".into());
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        self.q + self.eps_q
    }

    fn bias_bound(&self, lambda: f64, t: u64) -> f64 {
        let r = self.rate();
        let d = self.dim as f64;
        let t = t as f64;
        let geometric = 2.0 * r * (1.0 - r.powf(t)) / (1.0 - r);
        let log_term = (d * ((lambda * d + t) / (lambda * d * self.sigma)).ln()).sqrt();
        lambda.sqrt() + geometric + log_term
    }

    /// `(alpha_t, beta_t)`: bias bounds of the user and item embeddings.
    pub fn bias_bounds(&self, t: u64) -> (f64, f64) {
        (
            self.bias_bound(self.lambda_u, t),
            self.bias_bound(self.lambda_i, t),
        )
    }

    /// `C_t = (q + eps_q)^t`.
    pub fn collaborative_bound(&self, t: u64) -> f64 {
        self.rate().powf(t as f64)
    }
}

/// Per-episode constants shared by every bonus evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusWeights {
    pub alpha: f64,
    pub beta: f64,
    pub collab: f64,
}

impl BonusWeights {
    pub fn at(params: &UcbParams, t: u64) -> Self {
        let (alpha, beta) = params.bias_bounds(t);
        Self {
            alpha,
            beta,
            collab: params.collaborative_bound(t),
        }
    }
}

/// Exploration bonus for one user/item pair at episode `t`.
pub fn confidence_radius(state: &EmbeddingState, u: usize, i: usize, t: u64, params: &UcbParams) -> f64 {
    let w = BonusWeights::at(params, t);
    radius(&w, state.item_uncertainty(u, i), state.user_uncertainty(u, i))
}

#[inline]
fn radius(w: &BonusWeights, item_term: f64, user_term: f64) -> f64 {
    w.alpha * (item_term + w.collab / 2.0) + w.beta * (user_term + w.collab / 2.0)
}

/// Exploration bonus of user `u` against every item.
pub fn confidence_radii(state: &EmbeddingState, u: usize, weights: &BonusWeights, out: &mut [f64]) {
    let d = state.dim();
    let a_inv = state.user_gram_inv(u);
    let vu = state.user_embedding(u);
    for (i, slot) in out.iter_mut().enumerate() {
        let vi = state.item_embedding(i);
        let item_term = mahalanobis(a_inv, vi);
        let c_inv = state.item_gram_inv(i);
        debug_assert_eq!(c_inv.len(), d * d);
        let user_term = mahalanobis(c_inv, vu);
        *slot = radius(weights, item_term, user_term);
    }
}
