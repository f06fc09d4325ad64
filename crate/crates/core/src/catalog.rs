//! Items, providers and exposure budgets.
//!
//! The item/provider adjacency is kept sparse as an `item -> provider` lookup;
//! products with the adjacency matrix go through [`Catalog::exposures_of`] and
//! [`Catalog::provider_of`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    provider_of: Vec<usize>,
    items_of: Vec<Vec<usize>>,
    gamma: Vec<f64>,
    ranking_size: usize,
    batch_size: usize,
}

/// Default resource richness `1 + 1/|P|`.
pub fn default_richness(n_providers: usize) -> f64 {
    1.0 + 1.0 / n_providers as f64
}

impl Catalog {
    /// Builds a catalog whose budgets follow `gamma_p = K * T * richness * |I_p| / |I|`.
    ///
    /// `richness = None` selects [`default_richness`].
    pub fn new(
        provider_of: Vec<usize>,
        ranking_size: usize,
        batch_size: usize,
        richness: Option<f64>,
    ) -> Result<Self> {
        let items_of = group_items(&provider_of)?;
        let n_items = provider_of.len();
        let richness = richness.unwrap_or_else(|| default_richness(items_of.len()));
        if !(richness.is_finite() && richness > 0.0) {
            return Err(Error::InvalidParameter {
                name: "richness",
                reason: format!("must be positive, got {richness}"),
            });
        }
        let scale = (ranking_size * batch_size) as f64 * richness / n_items as f64;
        let gamma = items_of.iter().map(|items| scale * items.len() as f64).collect();
        Self::assemble(provider_of, items_of, gamma, ranking_size, batch_size)
    }

    /// Builds a catalog with explicitly supplied budgets.
    pub fn with_budgets(
        provider_of: Vec<usize>,
        gamma: Vec<f64>,
        ranking_size: usize,
        batch_size: usize,
    ) -> Result<Self> {
        let items_of = group_items(&provider_of)?;
        if gamma.len() != items_of.len() {
            return Err(Error::Shape(format!(
                "{} budgets for {} providers",
                gamma.len(),
                items_of.len()
            )));
        }
        Self::assemble(provider_of, items_of, gamma, ranking_size, batch_size)
    }

    fn assemble(
        provider_of: Vec<usize>,
        items_of: Vec<Vec<usize>>,
        gamma: Vec<f64>,
        ranking_size: usize,
        batch_size: usize,
    ) -> Result<Self> {
        let n_items = provider_of.len();
        if ranking_size > n_items {
            return Err(Error::RankingTooLarge {
                k: ranking_size,
                n_items,
            });
        }
        if batch_size == 0 {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: "batch size must be at least 1".into(),
            });
        }
        if let Some(p) = gamma.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("budget of provider {p} must be positive, got {}", gamma[p]),
            });
        }
        Ok(Self {
            provider_of,
            items_of,
            gamma,
            ranking_size,
            batch_size,
        })
    }

    pub fn n_items(&self) -> usize {
        self.provider_of.len()
    }

    pub fn n_providers(&self) -> usize {
        self.items_of.len()
    }

    pub fn ranking_size(&self) -> usize {
        self.ranking_size
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    #[inline]
    pub fn provider_of(&self, item: usize) -> usize {
        self.provider_of[item]
    }

    pub fn provider_map(&self) -> &[usize] {
        &self.provider_of
    }

    pub fn items_of(&self, provider: usize) -> &[usize] {
        &self.items_of[provider]
    }

    /// Per-provider exposure of a decision (`M^T x`).
    pub fn exposures_of(&self, decision: &[usize]) -> Result<Vec<f64>> {
        let mut exposure = vec![0.0; self.n_providers()];
        for (pos, &item) in decision.iter().enumerate() {
            if item >= self.n_items() {
                return Err(Error::IndexOutOfRange {
                    what: "item",
                    index: item,
                    len: self.n_items(),
                });
            }
            if decision[..pos].contains(&item) {
                return Err(Error::DuplicateItem(item));
            }
            exposure[self.provider_of[item]] += 1.0;
        }
        Ok(exposure)
    }

    /// Same as [`Catalog::exposures_of`] without validation, for hot loops
    /// over decisions the ranker produced itself.
    pub(crate) fn add_exposures(&self, decision: &[usize], into: &mut [f64]) {
        for &item in decision {
            into[self.provider_of[item]] += 1.0;
        }
    }
}

fn group_items(provider_of: &[usize]) -> Result<Vec<Vec<usize>>> {
    if provider_of.is_empty() {
        return Err(Error::EmptyData("catalog has no items".into()));
    }
    let n_providers = provider_of.iter().max().map_or(0, |p| p + 1);
    let mut items_of = vec![Vec::new(); n_providers];
    for (item, &p) in provider_of.iter().enumerate() {
        items_of[p].push(item);
    }
    if let Some(p) = items_of.iter().position(Vec::is_empty) {
        return Err(Error::EmptyProvider(p));
    }
    Ok(items_of)
}
