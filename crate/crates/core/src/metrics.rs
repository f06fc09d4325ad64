//! Evaluation metrics over interaction traces.
//!
//! - CTR@K: mean over arrivals of the mean true score of the shown list.
//! - MMF@K: mean over full episodes of `min_p E_p / gamma_p`, with `E_p` the
//!   episode exposure of provider `p`.
//! - r_lambda@K = CTR@K + lambda * MMF@K.
//! - lowest exposure: per episode, the smallest run-to-date provider exposure.

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::sim::{InteractionRecord, ScoreMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episode: usize,
    pub ctr_at_k: f64,
    pub mmf_at_k: f64,
    pub r_lambda_at_k: f64,
    pub lowest_exposure: f64,
    pub cumulative_exposure: Vec<f64>,
    /// Episode regret against an upper bound on the offline optimum, when computed.
    pub regret: Option<f64>,
}

/// MMF@K with the bookkeeping for arrivals that did not fill an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmfSummary {
    pub value: f64,
    pub full_episodes: usize,
    pub dropped_arrivals: usize,
}

pub fn ctr_at_k(trace: &[InteractionRecord], scores: &ScoreMatrix) -> f64 {
    if trace.is_empty() {
        return 0.0;
    }
    let total: f64 = trace
        .iter()
        .map(|r| {
            let k = r.items.len().max(1) as f64;
            r.items.iter().map(|&i| scores.get(r.user, i)).sum::<f64>() / k
        })
        .sum();
    total / trace.len() as f64
}

/// `min_p exposure_p / gamma_p`.
pub fn normalized_min_exposure(exposure: &[f64], gamma: &[f64]) -> f64 {
    exposure
        .iter()
        .zip(gamma)
        .map(|(e, g)| e / g)
        .fold(f64::INFINITY, f64::min)
}

/// Exposure per provider for each full episode of length `batch_size`,
/// keyed by the global step of each record.
fn episode_exposures(trace: &[InteractionRecord], catalog: &Catalog, batch_size: usize) -> (Vec<Vec<f64>>, usize) {
    let n_full = trace.iter().map(|r| r.t + 1).max().unwrap_or(0) / batch_size;
    let mut per_episode = vec![vec![0.0; catalog.n_providers()]; n_full];
    let mut dropped = 0;
    for r in trace {
        let ep = r.t / batch_size;
        if ep < n_full {
            catalog.add_exposures(&r.items, &mut per_episode[ep]);
        } else {
            dropped += 1;
        }
    }
    (per_episode, dropped)
}

pub fn mmf_at_k(trace: &[InteractionRecord], catalog: &Catalog, batch_size: usize) -> MmfSummary {
    let (per_episode, dropped) = episode_exposures(trace, catalog, batch_size);
    let value = if per_episode.is_empty() {
        0.0
    } else {
        per_episode
            .iter()
            .map(|e| normalized_min_exposure(e, catalog.gamma()))
            .sum::<f64>()
            / per_episode.len() as f64
    };
    MmfSummary {
        value,
        full_episodes: per_episode.len(),
        dropped_arrivals: dropped,
    }
}

pub fn r_lambda(ctr: f64, mmf: f64, lambda: f64) -> f64 {
    ctr + lambda * mmf
}

/// Minimum over providers of run-to-date exposure at the end of every episode
/// (including a trailing partial one).
pub fn lowest_exposure_series(trace: &[InteractionRecord], catalog: &Catalog, batch_size: usize) -> Vec<f64> {
    cumulative_exposure_series(trace, catalog, batch_size)
        .iter()
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

pub fn cumulative_exposure_series(trace: &[InteractionRecord], catalog: &Catalog, batch_size: usize) -> Vec<Vec<f64>> {
    let n_episodes = trace.iter().map(|r| r.t / batch_size + 1).max().unwrap_or(0);
    let mut per_episode = vec![vec![0.0; catalog.n_providers()]; n_episodes];
    for r in trace {
        catalog.add_exposures(&r.items, &mut per_episode[r.t / batch_size]);
    }
    let mut running = vec![0.0; catalog.n_providers()];
    per_episode
        .into_iter()
        .map(|e| {
            running.iter_mut().zip(&e).for_each(|(a, b)| *a += b);
            running.clone()
        })
        .collect()
}

/// One report per full episode of the trace.
pub fn episode_reports(
    trace: &[InteractionRecord],
    scores: &ScoreMatrix,
    catalog: &Catalog,
    batch_size: usize,
    lambda: f64,
) -> Vec<MetricsReport> {
    let (per_episode, _) = episode_exposures(trace, catalog, batch_size);
    let cumulative = cumulative_exposure_series(trace, catalog, batch_size);
    per_episode
        .iter()
        .enumerate()
        .map(|(ep, exposure)| {
            let lo = trace.partition_point(|r| r.t < ep * batch_size);
            let hi = trace.partition_point(|r| r.t < (ep + 1) * batch_size);
            let ctr = ctr_at_k(&trace[lo..hi], scores);
            let mmf = normalized_min_exposure(exposure, catalog.gamma());
            MetricsReport {
                episode: ep,
                ctr_at_k: ctr,
                mmf_at_k: mmf,
                r_lambda_at_k: r_lambda(ctr, mmf, lambda),
                lowest_exposure: cumulative[ep].iter().copied().fold(f64::INFINITY, f64::min),
                cumulative_exposure: cumulative[ep].clone(),
                regret: None,
            }
        })
        .collect()
}
