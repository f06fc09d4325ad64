//! Reference implementations used to check the library.
#![allow(dead_code)]

use fairloop::mf::Feedback;
use fairloop::sim::{ExperimentConfig, WorldParams};
use fairloop::EmbeddingState;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let e: Vec<f64> = (0..n).map(|r| if r == k { 1.0 } else { 0.0 }).collect();
            gauss_solve(a.to_vec(), e).expect("invertible")
        })
        .collect();
    (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect()
}

/// Sequential ridge replay with dense normal equations.
pub struct RidgeReplay {
    pub dim: usize,
    pub user_emb: Vec<Vec<f64>>,
    pub item_emb: Vec<Vec<f64>>,
    pub user_gram: Vec<Vec<Vec<f64>>>,
    pub user_rhs: Vec<Vec<f64>>,
    pub item_gram: Vec<Vec<Vec<f64>>>,
    pub item_rhs: Vec<Vec<f64>>,
    /// Item embeddings seen by each user, with the click, in order.
    pub user_history: Vec<Vec<(Vec<f64>, f64)>>,
}

impl RidgeReplay {
    /// Starts from the embeddings of `state`, which must not have seen data.
    pub fn from_fresh(state: &EmbeddingState) -> Self {
        let d = state.dim();
        let p = state.params();
        let eye = |l: f64| (0..d).map(|r| (0..d).map(|c| if r == c { l } else { 0.0 }).collect()).collect();
        Self {
            dim: d,
            user_emb: (0..state.n_users()).map(|u| state.user_embedding(u).to_vec()).collect(),
            item_emb: (0..state.n_items()).map(|i| state.item_embedding(i).to_vec()).collect(),
            user_gram: (0..state.n_users()).map(|_| eye(p.lambda_u)).collect(),
            user_rhs: vec![vec![0.0; d]; state.n_users()],
            item_gram: (0..state.n_items()).map(|_| eye(p.lambda_i)).collect(),
            item_rhs: vec![vec![0.0; d]; state.n_items()],
            user_history: vec![Vec::new(); state.n_users()],
        }
    }

    fn solve_normalized(gram: &[Vec<f64>], rhs: &[f64], current: &[f64]) -> Vec<f64> {
        let x = gauss_solve(gram.to_vec(), rhs.to_vec()).expect("ridge system is regular");
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-12 {
            current.to_vec()
        } else {
            x.iter().map(|v| v / n).collect()
        }
    }

    pub fn apply(&mut self, fb: &Feedback) {
        let (u, i, c) = (fb.user, fb.item, fb.click);
        let vu = self.user_emb[u].clone();
        let vi = self.item_emb[i].clone();
        for r in 0..self.dim {
            for k in 0..self.dim {
                self.user_gram[u][r][k] += vi[r] * vi[k];
                self.item_gram[i][r][k] += vu[r] * vu[k];
            }
            self.user_rhs[u][r] += c * vi[r];
            self.item_rhs[i][r] += c * vu[r];
        }
        self.user_history[u].push((vi, c));
        self.user_emb[u] = Self::solve_normalized(&self.user_gram[u], &self.user_rhs[u], &self.user_emb[u]);
        self.item_emb[i] = Self::solve_normalized(&self.item_gram[i], &self.item_rhs[i], &self.item_emb[i]);
    }
}

pub fn flat(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Projection onto `{ v : sum_p min(v_p, 0) >= -lambda }` by enumerating
/// families of active subset constraints `sum_{p in S} v_p = -lambda`.
pub fn project_active_set(w: &[f64], lambda: f64) -> Vec<f64> {
    let n = w.len();
    let feasible = |v: &[f64]| v.iter().map(|x| x.min(0.0)).sum::<f64>() >= -lambda - 1e-9;
    if feasible(w) {
        return w.to_vec();
    }
    let subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|m| (0..n).filter(|&p| m & (1 << p) != 0).collect())
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for fam in 1u64..(1 << subsets.len()) {
        let rows: Vec<&Vec<usize>> = (0..subsets.len()).filter(|&k| fam & (1 << k) != 0).map(|k| &subsets[k]).collect();
        if rows.len() > n {
            continue;
        }
        // (A A^T) y = -lambda - A w ; v = w + A^T y
        let gram: Vec<Vec<f64>> = rows
            .iter()
            .map(|a| rows.iter().map(|b| a.iter().filter(|p| b.contains(p)).count() as f64).collect())
            .collect();
        let rhs: Vec<f64> = rows.iter().map(|s| -lambda - s.iter().map(|&p| w[p]).sum::<f64>()).collect();
        let Some(y) = gauss_solve(gram, rhs) else { continue };
        let mut v = w.to_vec();
        for (s, yk) in rows.iter().zip(&y) {
            for &p in s.iter() {
                v[p] += yk;
            }
        }
        if !feasible(&v) {
            continue;
        }
        let dist: f64 = v.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, v));
        }
    }
    best.expect("some family is feasible").1
}

/// Best value of `min_p e_p / gamma_p + mu^T e / lambda` over the grid
/// `e_p in {0, 0.01, 0.02, ...} ∪ {beta_p}`, `e_p <= beta_p`.
pub fn ideal_exposure_grid(mu: &[f64], beta: &[f64], gamma: &[f64], lambda: f64) -> f64 {
    fn walk(p: usize, floor: f64, lin: f64, mu: &[f64], beta: &[f64], gamma: &[f64], lambda: f64) -> f64 {
        if p == mu.len() {
            return floor + lin / lambda;
        }
        let b = beta[p].max(0.0);
        let mut best = f64::NEG_INFINITY;
        let mut k = 0;
        loop {
            let e = (k as f64 * 0.01).min(b);
            let v = walk(p + 1, floor.min(e / gamma[p]), lin + mu[p] * e, mu, beta, gamma, lambda);
            best = best.max(v);
            if e >= b {
                return best;
            }
            k += 1;
        }
    }
    walk(0, f64::INFINITY, 0.0, mu, beta, gamma, lambda)
}

pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = k_subsets(n - 1, k);
    for mut s in k_subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Exhaustive search over all decision sequences.
pub fn brute_force_optimum(
    scores: &[Vec<f64>],
    provider_of: &[usize],
    gamma: &[f64],
    k: usize,
    lambda: f64,
    enforce: bool,
) -> Option<f64> {
    let t = scores.len();
    let choices = k_subsets(provider_of.len(), k);
    let mut idx = vec![0usize; t];
    let mut best: Option<f64> = None;
    loop {
        let mut exposure = vec![0.0; gamma.len()];
        let mut acc = 0.0;
        for (step, &c) in idx.iter().enumerate() {
            for &i in &choices[c] {
                exposure[provider_of[i]] += 1.0;
                acc += scores[step][i];
            }
        }
        let ok = !enforce || exposure.iter().zip(gamma).all(|(e, g)| *e <= g + 1e-9);
        if ok {
            let fair = exposure.iter().zip(gamma).map(|(e, g)| e / g).fold(f64::INFINITY, f64::min);
            let v = acc / t as f64 + lambda * fair;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        let mut p = 0;
        loop {
            if p == t {
                return best;
            }
            idx[p] += 1;
            if idx[p] < choices.len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Synthetic world used by the loop-level checks: 40 items, 8 providers, K=3.
pub fn loop_config(policy: fairloop::PolicyKind, seed: u64, batch_size: usize, n_arrivals: usize) -> ExperimentConfig {
    ExperimentConfig {
        policy,
        seed,
        n_arrivals,
        batch_size,
        ranking_size: 3,
        world: WorldParams {
            n_users: 64,
            n_items: 40,
            n_providers: 8,
            true_dim: 16,
            skew: 1.0,
            popularity: 0.0,
        },
        ..ExperimentConfig::default()
    }
}

/// Replays budgets step by step and reports the first arrival that shows an
/// exhausted provider while at least K items of live providers existed.
pub fn budget_violation(records: &[fairloop::InteractionRecord], catalog: &fairloop::Catalog) -> Option<String> {
    let t_len = catalog.batch_size();
    let k = catalog.ranking_size();
    let mut beta = catalog.gamma().to_vec();
    for r in records {
        if r.t % t_len == 0 {
            beta.copy_from_slice(catalog.gamma());
        }
        let live_items: usize = (0..catalog.n_providers())
            .filter(|&p| beta[p] > 0.0)
            .map(|p| catalog.items_of(p).len())
            .sum();
        if live_items >= k {
            if let Some(&i) = r.items.iter().find(|&&i| beta[catalog.provider_of(i)] <= 0.0) {
                return Some(format!(
                    "step {}: item {i} of exhausted provider {} shown (beta {:.3})",
                    r.t,
                    catalog.provider_of(i),
                    beta[catalog.provider_of(i)]
                ));
            }
        }
        for &i in &r.items {
            beta[catalog.provider_of(i)] -= 1.0;
        }
    }
    None
}
