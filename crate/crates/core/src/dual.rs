//! Max-min provider fairness in dual space.
//!
//! The weighted max-min regularizer `r(e) = min_p e_p / gamma_p` has a dual
//! variable `mu` (one price per provider). Its feasible region is
//!
//! ```text
//! D = { mu : sum_{p in S} gamma_p mu_p >= -lambda  for every subset S }
//! ```
//!
//! and since the tightest subset is always the set of negative coordinates,
//! membership reduces to `sum_p min(gamma_p mu_p, 0) >= -lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when testing membership in `D`.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualParams {
    /// Accuracy/fairness trade-off `lambda >= 0`.
    pub lambda: f64,
    /// Mirror step size `s`; the update is `mu -= s * g / gamma^2`, i.e.
    /// `s = 1 / (2 eta)` for proximal weight `eta`.
    pub step_size: f64,
    /// Weight of the fresh subgradient in the momentum average.
    pub momentum: f64,
}

impl DualParams {
    /// Default step size `1e-2 / sqrt(T)`.
    pub fn default_step_size(batch_size: usize) -> f64 {
        1e-2 / (batch_size as f64).sqrt()
    }

    pub fn new(lambda: f64, batch_size: usize) -> Self {
        Self {
            lambda,
            step_size: Self::default_step_size(batch_size),
            momentum: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and nonnegative, got {}", self.lambda),
            });
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step_size",
                reason: format!("must be positive, got {}", self.step_size),
            });
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter {
                name: "momentum",
                reason: format!("must lie in [0, 1], got {}", self.momentum),
            });
        }
        Ok(())
    }
}

/// `sum_p min(gamma_p mu_p, 0)`.
pub fn negative_mass(mu: &[f64], gamma: &[f64]) -> f64 {
    mu.iter().zip(gamma).map(|(m, g)| (m * g).min(0.0)).sum()
}

pub fn in_feasible_region(mu: &[f64], gamma: &[f64], lambda: f64) -> bool {
    negative_mass(mu, gamma) >= -lambda - FEASIBILITY_SLACK
}

/// Closed form of the regularizer's conjugate on `D`: `gamma^T mu / lambda + 1`.
pub fn conjugate_regularizer(mu: &[f64], gamma: &[f64], lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: "conjugate is only finite for lambda > 0".into(),
        });
    }
    let neg_mass = negative_mass(mu, gamma);
    if neg_mass < -lambda - FEASIBILITY_SLACK {
        return Err(Error::InfeasibleDual { neg_mass, lambda });
    }
    let inner: f64 = mu.iter().zip(gamma).map(|(m, g)| m * g).sum();
    Ok(inner / lambda + 1.0)
}

/// `min_p e_p / gamma_p + mu^T e / lambda`, the quantity maximized by
/// [`ideal_exposure`].
pub fn exposure_objective(e: &[f64], mu: &[f64], gamma: &[f64], lambda: f64) -> f64 {
    let floor = e
        .iter()
        .zip(gamma)
        .map(|(e, g)| e / g)
        .fold(f64::INFINITY, f64::min);
    let linear: f64 = e.iter().zip(mu).map(|(e, m)| e * m).sum();
    floor + if lambda > 0.0 { linear / lambda } else { 0.0 }
}

/// Maximizer of `min_p e_p / gamma_p + mu^T e / lambda` over `0 <= e <= beta`.
///
/// Providers with a positive price sit at their cap. The rest share a common
/// normalized level `m`, on which the objective is linear, so `m` is either 0
/// or the largest level every provider can still reach.
pub fn ideal_exposure(mu: &[f64], beta: &[f64], gamma: &[f64], lambda: f64) -> Vec<f64> {
    let cap: Vec<f64> = beta.iter().map(|b| b.max(0.0)).collect();
    let m_max = cap
        .iter()
        .zip(gamma)
        .map(|(b, g)| b / g)
        .fold(f64::INFINITY, f64::min);
    let slope = 1.0
        + mu.iter()
            .zip(gamma)
            .filter(|(m, _)| **m <= 0.0)
            .map(|(m, g)| {
                if lambda > 0.0 {
                    m * g / lambda
                } else if *m < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            })
            .sum::<f64>();
    let level = if slope > 0.0 { m_max } else { 0.0 };
    mu.iter()
        .zip(gamma)
        .zip(&cap)
        .map(|((m, g), b)| if *m > 0.0 { *b } else { (g * level).min(*b) })
        .collect()
}

/// `alpha * g_tilde + (1 - alpha) * g_prev`.
pub fn momentum_gradient(g_tilde: &[f64], g_prev: &[f64], alpha: f64) -> Vec<f64> {
    g_tilde
        .iter()
        .zip(g_prev)
        .map(|(gt, gp)| alpha * gt + (1.0 - alpha) * gp)
        .collect()
}

/// Projection onto `D` in the gamma-weighted norm.
///
/// In `v = gamma * mu` coordinates this is the Euclidean projection onto
/// `{ v : sum_p min(v_p, 0) >= -lambda }`. The KKT conditions give
/// `v_p = min(w_p + nu, 0)` for negative inputs, with the shift `nu` found by
/// sweeping the ascending-sorted negative prefix.
pub fn project_to_feasible(mu_raw: &[f64], gamma: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = mu_raw.to_vec();
    if negative_mass(mu_raw, gamma) >= -lambda {
        return out;
    }
    let mut neg: Vec<(f64, usize)> = mu_raw
        .iter()
        .zip(gamma)
        .enumerate()
        .filter_map(|(p, (m, g))| {
            let v = m * g;
            (v < 0.0).then_some((v, p))
        })
        .collect();
    neg.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut shift = None;
    if lambda > 0.0 {
        let mut prefix = 0.0;
        let mut sums = Vec::with_capacity(neg.len());
        for (v, _) in &neg {
            prefix += v;
            sums.push(prefix);
        }
        for k in (1..=neg.len()).rev() {
            let nu = (-lambda - sums[k - 1]) / k as f64;
            let last_stays = neg[k - 1].0 + nu < 0.0;
            let next_clips = k == neg.len() || neg[k].0 + nu >= 0.0;
            if last_stays && next_clips {
                shift = Some(nu);
                break;
            }
        }
    }
    for (v, p) in neg {
        out[p] = match shift {
            Some(nu) if v + nu < 0.0 => (v + nu) / gamma[p],
            _ => 0.0,
        };
    }
    out
}

/// Per-episode dual state: price `mu`, momentum gradient and remaining budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub mu: Vec<f64>,
    pub g_momentum: Vec<f64>,
    pub beta_remaining: Vec<f64>,
    pub params: DualParams,
}

impl DualState {
    pub fn new(gamma: &[f64], params: DualParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            mu: vec![0.0; gamma.len()],
            g_momentum: vec![0.0; gamma.len()],
            beta_remaining: gamma.to_vec(),
            params,
        })
    }

    /// `mu = 0`, `g = 0`, `beta = gamma`.
    pub fn reset(&mut self, gamma: &[f64]) {
        self.mu.iter_mut().for_each(|m| *m = 0.0);
        self.g_momentum.iter_mut().for_each(|g| *g = 0.0);
        self.beta_remaining.copy_from_slice(gamma);
    }

    pub fn consume_resources(&mut self, exposure: &[f64]) {
        for (b, e) in self.beta_remaining.iter_mut().zip(exposure) {
            *b -= e;
        }
    }

    /// Minimizes `<g, mu> + eta ||mu - mu_t||^2_{gamma^2}` over `D`.
    pub fn dual_step(&mut self, g: &[f64], gamma: &[f64]) {
        let s = self.params.step_size;
        let raw: Vec<f64> = self
            .mu
            .iter()
            .zip(g)
            .zip(gamma)
            .map(|((m, g), w)| m - s * g / (w * w))
            .collect();
        self.mu = project_to_feasible(&raw, gamma, self.params.lambda);
    }

    /// Post-decision update for one arrival: budgets, ideal exposure,
    /// momentum subgradient and the mirror step.
    pub fn observe_decision(&mut self, exposure: &[f64], gamma: &[f64]) {
        let ideal = ideal_exposure(&self.mu, &self.beta_remaining, gamma, self.params.lambda);
        self.consume_resources(exposure);
        let g_tilde: Vec<f64> = ideal.iter().zip(exposure).map(|(e, x)| e - x).collect();
        self.g_momentum = momentum_gradient(&g_tilde, &self.g_momentum, self.params.momentum);
        let g = self.g_momentum.clone();
        self.dual_step(&g, gamma);
    }
}
