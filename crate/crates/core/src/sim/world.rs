//! Ground-truth preferences and click feedback.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Range the synthetic true scores are mapped onto.
pub const SCORE_RANGE: (f64, f64) = (0.05, 0.95);

/// Dense `n_users x n_items` matrix of true click probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    n_users: usize,
    n_items: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(n_users: usize, n_items: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_users * n_items {
            return Err(Error::Shape(format!(
                "{} values for a {n_users}x{n_items} score matrix",
                data.len()
            )));
        }
        Ok(Self {
            n_users,
            n_items,
            data,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    #[inline]
    pub fn get(&self, u: usize, i: usize) -> f64 {
        self.data[u * self.n_items + i]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n_items..(u + 1) * self.n_items]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub n_users: usize,
    pub n_items: usize,
    pub n_providers: usize,
    /// Dimension of the ground-truth embeddings.
    pub true_dim: usize,
    /// Provider `p` gets item share proportional to `(p + 1)^(-skew)`.
    pub skew: f64,
    /// Standard deviation of a per-item popularity offset, relative to the
    /// spread of the user/item affinity term. 0 disables it.
    pub popularity: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            n_users: 64,
            n_items: 40,
            n_providers: 8,
            true_dim: 16,
            skew: 1.0,
            popularity: 0.0,
        }
    }
}

impl WorldParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_users == 0 {
            v.push("n_users: must be at least 1".to_string());
        }
        if self.n_providers == 0 {
            v.push("n_providers: must be at least 1".to_string());
        }
        if self.n_items < self.n_providers {
            v.push(format!(
                "n_items: {} items cannot cover {} providers",
                self.n_items, self.n_providers
            ));
        }
        if self.true_dim == 0 {
            v.push("true_dim: must be at least 1".to_string());
        }
        if !(self.popularity.is_finite() && self.popularity >= 0.0) {
            v.push(format!("popularity: must be finite and nonnegative, got {}", self.popularity));
        }
        if !(self.skew.is_finite() && self.skew >= 0.0) {
            v.push(format!("skew: must be finite and nonnegative, got {}", self.skew));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueEmbeddings {
    pub dim: usize,
    pub users: Vec<f64>,
    pub items: Vec<f64>,
    pub item_popularity: Vec<f64>,
}

/// The environment a policy is run against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub provider_of: Vec<usize>,
    pub scores: ScoreMatrix,
    /// Present for synthetic worlds.
    pub embeddings: Option<TrueEmbeddings>,
}

impl World {
    pub fn from_scores(provider_of: Vec<usize>, scores: ScoreMatrix) -> Result<Self> {
        if provider_of.len() != scores.n_items() {
            return Err(Error::Shape(format!(
                "{} items in the provider map, {} score columns",
                provider_of.len(),
                scores.n_items()
            )));
        }
        Ok(Self {
            provider_of,
            scores,
            embeddings: None,
        })
    }

    pub fn n_users(&self) -> usize {
        self.scores.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.scores.n_items()
    }

    /// Bernoulli click with probability `s(u, i)`.
    pub fn click<R: Rng + ?Sized>(&self, u: usize, i: usize, rng: &mut R) -> bool {
        click_with_probability(self.scores.get(u, i), rng)
    }
}

pub fn click_with_probability<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Item counts per provider: one item each, the rest by largest remainder
/// of `(p + 1)^(-skew)` shares.
pub fn provider_sizes(n_items: usize, n_providers: usize, skew: f64) -> Vec<usize> {
    let weights: Vec<f64> = (0..n_providers).map(|p| ((p + 1) as f64).powf(-skew)).collect();
    let total: f64 = weights.iter().sum();
    let spare = n_items - n_providers;
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * spare as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| 1 + q.floor() as usize).collect();
    let mut left = n_items - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n_providers).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for p in order {
        if left == 0 {
            break;
        }
        sizes[p] += 1;
        left -= 1;
    }
    sizes
}

/// Seeded synthetic world: Gaussian true embeddings, dot-product scores
/// min-max mapped onto [`SCORE_RANGE`], long-tailed provider sizes.
pub fn generate_synthetic_world(params: &WorldParams, seed: u64) -> Result<World> {
    let violations = params.violations();
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = provider_sizes(params.n_items, params.n_providers, params.skew);
    let mut provider_of: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(p, &n)| std::iter::repeat_n(p, n))
        .collect();
    provider_of.shuffle(&mut rng);

    let d = params.true_dim;
    let mut gaussian = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let users = gaussian(params.n_users * d);
    let items = gaussian(params.n_items * d);
    let bias: Vec<f64> = gaussian(params.n_items)
        .into_iter()
        .map(|z| z * params.popularity)
        .collect();

    // affinity scaled to unit variance so `popularity` is a relative weight
    let scale = 1.0 / (d as f64).sqrt();
    let mut raw = Vec::with_capacity(params.n_users * params.n_items);
    for u in users.chunks_exact(d) {
        for (i, b) in items.chunks_exact(d).zip(&bias) {
            raw.push(scale * u.iter().zip(i).map(|(a, b)| a * b).sum::<f64>() + b);
        }
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = SCORE_RANGE;
    let span = hi - lo;
    for v in &mut raw {
        *v = if span > 0.0 {
            a + (b - a) * (*v - lo) / span
        } else {
            (a + b) / 2.0
        };
    }
    Ok(World {
        provider_of,
        scores: ScoreMatrix::new(params.n_users, params.n_items, raw)?,
        embeddings: Some(TrueEmbeddings {
            dim: d,
            users,
            items,
            item_popularity: bias,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_world() {
        let p = WorldParams::default();
        assert_eq!(generate_synthetic_world(&p, 3).unwrap(), generate_synthetic_world(&p, 3).unwrap());
        assert_ne!(generate_synthetic_world(&p, 3).unwrap(), generate_synthetic_world(&p, 4).unwrap());
    }

    #[test]
    fn scores_in_range() {
        let w = generate_synthetic_world(&WorldParams::default(), 1).unwrap();
        assert!(w.scores.values().iter().all(|s| (0.05 - 1e-12..=0.95 + 1e-12).contains(s)));
    }

    #[test]
    fn zero_skew_is_near_uniform() {
        let sizes = provider_sizes(43, 8, 0.0);
        assert_eq!(sizes.iter().sum::<usize>(), 43);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);

        let skewed = provider_sizes(40, 8, 1.0);
        assert_eq!(skewed.iter().sum::<usize>(), 40);
        assert!(skewed[0] > skewed[7] && skewed.iter().all(|&s| s >= 1));
    }

    #[test]
    fn click_extremes_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| click_with_probability(1.0, &mut rng)));
        assert!((0..1000).all(|_| !click_with_probability(0.0, &mut rng)));
        let n = 10_000;
        let hits = (0..n).filter(|_| click_with_probability(0.5, &mut rng)).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.02);
    }
}
