//! Offline optimum of the amortized accuracy/fairness objective
//!
//! ```text
//! R = (1/T) sum_t sum_{i in x_t} s_{t,i} + lambda * min_p (E_p / gamma_p),
//! E = sum_t M^T x_t <= gamma
//! ```
//!
//! on tiny instances, plus a weak-duality upper bound usable on instances that
//! are far too large to enumerate.
//!
//! The exact solver is an exhaustive search over decision sequences that
//! merges sequences reaching the same cumulative exposure vector: the final
//! objective only depends on the accumulated accuracy and on `E`, so keeping
//! the best accuracy per exposure state loses nothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::dual::project_to_feasible;
use crate::error::{Error, Result};
use crate::ranker::top_k_of;

/// Limit on `T * C(n, K) * exposure states` work for the exact solver.
pub const ENUMERATION_LIMIT: f64 = 1e7;

const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineInstance {
    /// `scores[t][i]`: true click probability of the user arriving at step `t`.
    pub scores: Vec<Vec<f64>>,
    pub catalog: Catalog,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BudgetMode {
    /// Cumulative exposure must stay within `gamma`.
    Enforced,
    /// Budget constraint dropped; only the objective remains.
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSolution {
    pub value: f64,
    pub decisions: Vec<Vec<usize>>,
}

/// Objective of a realized decision sequence on true scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizedObjective {
    pub value: f64,
    pub accuracy: f64,
    pub fairness: f64,
    /// Whether the cumulative exposure respects every budget.
    pub budget_feasible: bool,
}

impl OfflineInstance {
    pub fn new(scores: Vec<Vec<f64>>, catalog: Catalog, lambda: f64) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyData("offline instance has no steps".into()));
        }
        for (t, row) in scores.iter().enumerate() {
            if row.len() != catalog.n_items() {
                return Err(Error::Shape(format!(
                    "score row {t} has {} entries for {} items",
                    row.len(),
                    catalog.n_items()
                )));
            }
            if row.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "scores",
                    reason: format!("row {t} contains a non-finite score"),
                });
            }
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and nonnegative, got {lambda}"),
            });
        }
        Ok(Self {
            scores,
            catalog,
            lambda,
        })
    }

    pub fn horizon(&self) -> usize {
        self.scores.len()
    }

    fn fairness_term(&self, exposure: &[f64]) -> f64 {
        exposure
            .iter()
            .zip(self.catalog.gamma())
            .map(|(e, g)| e / g)
            .fold(f64::INFINITY, f64::min)
    }

    /// Evaluates a decision sequence on the instance's true scores.
    pub fn realized_objective(&self, decisions: &[Vec<usize>]) -> Result<RealizedObjective> {
        if decisions.len() != self.horizon() {
            return Err(Error::Shape(format!(
                "{} decisions for horizon {}",
                decisions.len(),
                self.horizon()
            )));
        }
        let mut exposure = vec![0.0; self.catalog.n_providers()];
        let mut acc = 0.0;
        for (row, items) in self.scores.iter().zip(decisions) {
            let e = self.catalog.exposures_of(items)?;
            exposure.iter_mut().zip(&e).for_each(|(a, b)| *a += b);
            acc += items.iter().map(|&i| row[i]).sum::<f64>();
        }
        let accuracy = acc / self.horizon() as f64;
        let fairness = self.lambda * self.fairness_term(&exposure);
        let budget_feasible = exposure
            .iter()
            .zip(self.catalog.gamma())
            .all(|(e, g)| *e <= g + BUDGET_TOL);
        Ok(RealizedObjective {
            value: accuracy + fairness,
            accuracy,
            fairness,
            budget_feasible,
        })
    }

    /// Upper bound on the number of distinct cumulative exposure vectors.
    fn state_bound(&self, mode: BudgetMode) -> f64 {
        let p = self.catalog.n_providers();
        let total = (self.catalog.ranking_size() * self.horizon()) as f64;
        // compositions of K*T slots over p providers
        let compositions = binomial(total + p as f64 - 1.0, p as f64 - 1.0);
        match mode {
            BudgetMode::Relaxed => compositions,
            BudgetMode::Enforced => {
                let boxed: f64 = self
                    .catalog
                    .gamma()
                    .iter()
                    .map(|g| (g + BUDGET_TOL).floor() + 1.0)
                    .product();
                boxed.min(compositions)
            }
        }
    }

    /// Work estimate checked against [`ENUMERATION_LIMIT`].
    pub fn enumeration_cost(&self, mode: BudgetMode) -> f64 {
        let subsets = binomial(
            self.catalog.n_items() as f64,
            self.catalog.ranking_size() as f64,
        );
        self.horizon() as f64 * subsets * self.state_bound(mode)
    }
}

fn binomial(n: f64, k: f64) -> f64 {
    if k < 0.0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    let mut j = 0.0;
    while j < k {
        acc *= (n - j) / (j + 1.0);
        j += 1.0;
    }
    acc.round()
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] < n - k + pos {
                break;
            }
        }
        cur[pos] += 1;
        for j in pos + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

struct Node {
    exposure: Vec<u32>,
    acc: f64,
    parent: usize,
    subset: usize,
}

/// Exact offline optimum by exhaustive search over exposure states.
pub fn solve_offline_optimum(instance: &OfflineInstance, mode: BudgetMode) -> Result<OfflineSolution> {
    let cost = instance.enumeration_cost(mode);
    if cost > ENUMERATION_LIMIT {
        return Err(Error::EnumerationBudget {
            required: cost,
            limit: ENUMERATION_LIMIT,
        });
    }
    let catalog = &instance.catalog;
    let n_p = catalog.n_providers();
    let subsets = k_subsets(catalog.n_items(), catalog.ranking_size());
    let deltas: Vec<Vec<u32>> = subsets
        .iter()
        .map(|s| {
            let mut d = vec![0u32; n_p];
            for &i in s {
                d[catalog.provider_of(i)] += 1;
            }
            d
        })
        .collect();
    let caps: Vec<f64> = catalog.gamma().iter().map(|g| g + BUDGET_TOL).collect();

    let mut layers: Vec<Vec<Node>> = vec![vec![Node {
        exposure: vec![0; n_p],
        acc: 0.0,
        parent: usize::MAX,
        subset: usize::MAX,
    }]];
    for row in &instance.scores {
        let gains: Vec<f64> = subsets.iter().map(|s| s.iter().map(|&i| row[i]).sum()).collect();
        let prev = layers.last().expect("at least the root layer");
        let mut next: Vec<Node> = Vec::new();
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        for (pi, node) in prev.iter().enumerate() {
            for (si, delta) in deltas.iter().enumerate() {
                let exposure: Vec<u32> = node.exposure.iter().zip(delta).map(|(a, b)| a + b).collect();
                if mode == BudgetMode::Enforced
                    && exposure.iter().zip(&caps).any(|(e, c)| *e as f64 > *c)
                {
                    continue;
                }
                let acc = node.acc + gains[si];
                match index.get(&exposure) {
                    Some(&slot) => {
                        if acc > next[slot].acc {
                            next[slot].acc = acc;
                            next[slot].parent = pi;
                            next[slot].subset = si;
                        }
                    }
                    None => {
                        index.insert(exposure.clone(), next.len());
                        next.push(Node {
                            exposure,
                            acc,
                            parent: pi,
                            subset: si,
                        });
                    }
                }
            }
        }
        if next.is_empty() {
            return Err(Error::BudgetInfeasible);
        }
        layers.push(next);
    }

    let horizon = instance.horizon() as f64;
    let last = layers.last().expect("nonempty");
    let (best_idx, best_value) = last
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let e: Vec<f64> = node.exposure.iter().map(|&v| v as f64).collect();
            (k, node.acc / horizon + instance.lambda * instance.fairness_term(&e))
        })
        .fold((usize::MAX, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        });

    let mut decisions = Vec::with_capacity(instance.horizon());
    let mut cursor = best_idx;
    for layer in layers[1..].iter().rev() {
        let node = &layer[cursor];
        decisions.push(subsets[node.subset].clone());
        cursor = node.parent;
    }
    decisions.reverse();
    Ok(OfflineSolution {
        value: best_value,
        decisions,
    })
}

/// `R_OPT - realized`.
pub fn regret(realized: f64, r_opt: f64) -> f64 {
    r_opt - realized
}

/// Value of the Lagrangian dual at price `mu`:
/// `sum_t topK_i (s_{t,i}/T - mu_{p(i)}) + lambda + gamma^T mu`.
///
/// Every `mu` in the feasible region gives an upper bound on the budgeted
/// offline optimum.
pub fn dual_bound_at(scores: &[Vec<f64>], catalog: &Catalog, lambda: f64, mu: &[f64]) -> f64 {
    dual_bound_with_counts(scores, catalog, lambda, mu, &mut vec![0.0; catalog.n_providers()])
}

fn dual_bound_with_counts(
    scores: &[Vec<f64>],
    catalog: &Catalog,
    lambda: f64,
    mu: &[f64],
    counts: &mut [f64],
) -> f64 {
    let horizon = scores.len() as f64;
    let k = catalog.ranking_size();
    let mut reduced = vec![0.0; catalog.n_items()];
    let mut idx: Vec<usize> = Vec::with_capacity(catalog.n_items());
    counts.iter_mut().for_each(|c| *c = 0.0);
    let mut total = 0.0;
    for row in scores {
        for (i, r) in reduced.iter_mut().enumerate() {
            *r = row[i] / horizon - mu[catalog.provider_of(i)];
        }
        idx.clear();
        idx.extend(0..reduced.len());
        for i in top_k_of(&reduced, &mut idx, k) {
            total += reduced[i];
            counts[catalog.provider_of(i)] += 1.0;
        }
    }
    total + lambda + mu.iter().zip(catalog.gamma()).map(|(m, g)| m * g).sum::<f64>()
}

/// Weak-duality upper bound on the budgeted offline optimum, minimized over
/// the dual feasible region by projected subgradient descent. The best value
/// seen is returned, so the result is a valid bound for any iteration count.
pub fn dual_upper_bound(scores: &[Vec<f64>], catalog: &Catalog, lambda: f64, iterations: usize) -> f64 {
    let gamma = catalog.gamma();
    let n_p = catalog.n_providers();
    let horizon = scores.len().max(1) as f64;
    let mut mu = vec![0.0; n_p];
    let mut counts = vec![0.0; n_p];
    let mut best = dual_bound_with_counts(scores, catalog, lambda, &mu, &mut counts);
    // price scale of one step's score
    let base = 1.0 / horizon;
    for k in 0..iterations {
        // subgradient w.r.t. mu_p is gamma_p - count_p; step in gamma-weighted geometry
        let step = base / ((k + 1) as f64).sqrt();
        let raw: Vec<f64> = mu
            .iter()
            .zip(gamma)
            .zip(&counts)
            .map(|((m, g), c)| m - step * (g - c) / g)
            .collect();
        mu = project_to_feasible(&raw, gamma, lambda);
        let value = dual_bound_with_counts(scores, catalog, lambda, &mu, &mut counts);
        if value < best {
            best = value;
        }
    }
    best
}
