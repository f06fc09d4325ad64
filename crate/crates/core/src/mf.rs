//! Incremental matrix-factorization accuracy model.
//!
//! Every user `u` keeps ridge statistics `(A_u, b_u)` and every item `i` keeps
//! `(C_i, d_i)`. A click record `(u, i, c)` adds `v_i v_i^T` / `c v_i` to the
//! user side and `v_u v_u^T` / `c v_u` to the item side, after which both
//! embeddings are re-solved in closed form and normalized to unit length.
//!
//! Inverses of the Gram matrices are cached because the exploration bonus
//! needs `||x||_{A^{-1}}` for every candidate item at every arrival. They are
//! recomputed from a fresh Cholesky factorization after each update, never
//! rank-one patched.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solutions shorter than this are treated as zero and not normalized.
pub const ZERO_SOLUTION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfParams {
    pub dim: usize,
    pub lambda_u: f64,
    pub lambda_i: f64,
}

impl Default for MfParams {
    fn default() -> Self {
        Self {
            dim: 16,
            lambda_u: 1.0,
            lambda_i: 1.0,
        }
    }
}

impl MfParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "embedding dimension must be at least 1".into(),
            });
        }
        for (name, v) in [("lambda_u", self.lambda_u), ("lambda_i", self.lambda_i)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("ridge weight must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// One click observation `(user, item, click)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub user: usize,
    pub item: usize,
    pub click: f64,
}

impl Feedback {
    pub fn new(user: usize, item: usize, clicked: bool) -> Self {
        Self {
            user,
            item,
            click: if clicked { 1.0 } else { 0.0 },
        }
    }
}

/// Ridge statistics and embeddings for one side (users or items).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RidgeSide {
    gram: Vec<f64>,
    gram_inv: Vec<f64>,
    rhs: Vec<f64>,
    emb: Vec<f64>,
    obs: Vec<u64>,
}

impl RidgeSide {
    fn new(n: usize, dim: usize, lambda: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut gram = vec![0.0; n * dim * dim];
        let mut gram_inv = vec![0.0; n * dim * dim];
        for e in 0..n {
            for k in 0..dim {
                gram[e * dim * dim + k * dim + k] = lambda;
                gram_inv[e * dim * dim + k * dim + k] = 1.0 / lambda;
            }
        }
        let mut emb = vec![0.0; n * dim];
        for chunk in emb.chunks_mut(dim) {
            random_unit(chunk, rng);
        }
        Self {
            gram,
            gram_inv,
            rhs: vec![0.0; n * dim],
            emb,
            obs: vec![0; n],
        }
    }

    fn len(&self) -> usize {
        self.obs.len()
    }

    /// Adds `x x^T` and `c x` to entity `e`, then re-solves its embedding.
    fn observe(&mut self, e: usize, dim: usize, x: &[f64], click: f64) {
        let gram = &mut self.gram[e * dim * dim..(e + 1) * dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                gram[r * dim + c] += x[r] * x[c];
            }
        }
        let rhs = &mut self.rhs[e * dim..(e + 1) * dim];
        for (b, xv) in rhs.iter_mut().zip(x) {
            *b += click * xv;
        }
        self.obs[e] += 1;

        let a = DMatrix::from_row_slice(dim, dim, gram);
        let chol = a
            .cholesky()
            .expect("ridge Gram matrix stays positive definite");
        let inv = chol.inverse();
        let sol = chol.solve(&DVector::from_column_slice(rhs));
        // DMatrix is column-major; the Gram inverse is symmetric.
        self.gram_inv[e * dim * dim..(e + 1) * dim * dim].copy_from_slice(inv.as_slice());

        let norm = sol.norm();
        if norm >= ZERO_SOLUTION_NORM {
            for (v, s) in self.emb[e * dim..(e + 1) * dim].iter_mut().zip(sol.iter()) {
                *v = s / norm;
            }
        }
    }
}

fn random_unit(out: &mut [f64], rng: &mut ChaCha8Rng) {
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-6 {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// `sqrt(x^T M x)` for a row-major `dim x dim` matrix.
#[inline]
pub(crate) fn mahalanobis(m: &[f64], x: &[f64]) -> f64 {
    let dim = x.len();
    let mut acc = 0.0;
    for r in 0..dim {
        let row = &m[r * dim..(r + 1) * dim];
        let mut s = 0.0;
        for c in 0..dim {
            s += row[c] * x[c];
        }
        acc += x[r] * s;
    }
    acc.max(0.0).sqrt()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingState {
    params: MfParams,
    users: RidgeSide,
    items: RidgeSide,
}

impl EmbeddingState {
    /// `A_u = lambda_u I`, `C_i = lambda_i I`, zero targets and seeded random
    /// unit embeddings.
    pub fn new(n_users: usize, n_items: usize, params: MfParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = RidgeSide::new(n_users, params.dim, params.lambda_u, &mut rng);
        let items = RidgeSide::new(n_items, params.dim, params.lambda_i, &mut rng);
        Ok(Self {
            params,
            users,
            items,
        })
    }

    pub fn params(&self) -> &MfParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_embedding(&self, u: usize) -> &[f64] {
        let d = self.dim();
        &self.users.emb[u * d..(u + 1) * d]
    }

    pub fn item_embedding(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.items.emb[i * d..(i + 1) * d]
    }

    /// Overrides a user embedding, e.g. to warm-start from a pre-trained model.
    pub fn set_user_embedding(&mut self, u: usize, v: &[f64]) -> Result<()> {
        self.check_dim(v)?;
        self.check_index("user", u, self.n_users())?;
        let d = self.dim();
        self.users.emb[u * d..(u + 1) * d].copy_from_slice(v);
        Ok(())
    }

    pub fn set_item_embedding(&mut self, i: usize, v: &[f64]) -> Result<()> {
        self.check_dim(v)?;
        self.check_index("item", i, self.n_items())?;
        let d = self.dim();
        self.items.emb[i * d..(i + 1) * d].copy_from_slice(v);
        Ok(())
    }

    /// Row-major `A_u`.
    pub fn user_gram(&self, u: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.users.gram[u * dd..(u + 1) * dd]
    }

    /// Row-major cached `A_u^{-1}`.
    pub fn user_gram_inv(&self, u: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.users.gram_inv[u * dd..(u + 1) * dd]
    }

    pub fn user_rhs(&self, u: usize) -> &[f64] {
        let d = self.dim();
        &self.users.rhs[u * d..(u + 1) * d]
    }

    /// Row-major `C_i`.
    pub fn item_gram(&self, i: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.items.gram[i * dd..(i + 1) * dd]
    }

    /// Row-major cached `C_i^{-1}`.
    pub fn item_gram_inv(&self, i: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.items.gram_inv[i * dd..(i + 1) * dd]
    }

    pub fn item_rhs(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.items.rhs[i * d..(i + 1) * d]
    }

    pub fn user_observations(&self, u: usize) -> u64 {
        self.users.obs[u]
    }

    pub fn item_observations(&self, i: usize) -> u64 {
        self.items.obs[i]
    }

    /// Scales the user Gram matrix and refreshes its inverse. Only useful for
    /// probing the exploration bonus; it bypasses the ridge bookkeeping.
    pub fn scale_user_gram(&mut self, u: usize, factor: f64) {
        let dd = self.dim() * self.dim();
        for v in &mut self.users.gram[u * dd..(u + 1) * dd] {
            *v *= factor;
        }
        for v in &mut self.users.gram_inv[u * dd..(u + 1) * dd] {
            *v /= factor;
        }
    }

    /// `v_u^T v_i`.
    pub fn predict_score(&self, u: usize, i: usize) -> f64 {
        dot(self.user_embedding(u), self.item_embedding(i))
    }

    /// Scores of user `u` against every item.
    pub fn predict_all(&self, u: usize, out: &mut [f64]) {
        let d = self.dim();
        let vu = self.user_embedding(u);
        for (s, vi) in out.iter_mut().zip(self.items.emb.chunks_exact(d)) {
            *s = dot(vu, vi);
        }
    }

    /// `||v_i||_{A_u^{-1}}`.
    pub fn item_uncertainty(&self, u: usize, i: usize) -> f64 {
        mahalanobis(self.user_gram_inv(u), self.item_embedding(i))
    }

    /// `||v_u||_{C_i^{-1}}`.
    pub fn user_uncertainty(&self, u: usize, i: usize) -> f64 {
        mahalanobis(self.item_gram_inv(i), self.user_embedding(u))
    }

    /// Applies a feedback batch in order.
    ///
    /// Each record updates the user side with the item embedding as it was
    /// before the record, and the item side with the user embedding as it was
    /// before the record. The whole batch is validated first; on error nothing
    /// is modified.
    pub fn ingest_feedback(&mut self, batch: &[Feedback]) -> Result<()> {
        for fb in batch {
            self.check_index("user", fb.user, self.n_users())?;
            self.check_index("item", fb.item, self.n_items())?;
            if fb.click != 0.0 && fb.click != 1.0 {
                return Err(Error::InvalidClick(fb.click));
            }
        }
        let d = self.dim();
        let mut vu = vec![0.0; d];
        let mut vi = vec![0.0; d];
        for fb in batch {
            vu.copy_from_slice(self.user_embedding(fb.user));
            vi.copy_from_slice(self.item_embedding(fb.item));
            self.users.observe(fb.user, d, &vi, fb.click);
            self.items.observe(fb.item, d, &vu, fb.click);
        }
        Ok(())
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!(
                "embedding of length {} for dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_index(&self, what: &'static str, index: usize, len: usize) -> Result<()> {
        if index >= len {
            return Err(Error::IndexOutOfRange { what, index, len });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize) -> MfParams {
        MfParams {
            dim,
            lambda_u: 1.0,
            lambda_i: 1.0,
        }
    }

    #[test]
    fn initial_statistics() {
        let s = EmbeddingState::new(3, 4, params(2), 1).unwrap();
        assert_eq!(s.user_gram(0), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.user_rhs(2), &[0.0, 0.0]);
        assert_eq!(s.item_gram_inv(3), &[1.0, 0.0, 0.0, 1.0]);

        let s = EmbeddingState::new(5, 5, params(3), 9).unwrap();
        for u in 0..5 {
            let n: f64 = s.user_embedding(u).iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = EmbeddingState::new(4, 6, params(5), 42).unwrap();
        let b = EmbeddingState::new(4, 6, params(5), 42).unwrap();
        assert_eq!(a, b);
        let c = EmbeddingState::new(4, 6, params(5), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_zero_dimension_and_bad_lambda() {
        assert!(EmbeddingState::new(1, 1, params(0), 0).is_err());
        let p = MfParams {
            lambda_u: 0.0,
            ..params(2)
        };
        assert!(EmbeddingState::new(1, 1, p, 0).is_err());
    }

    #[test]
    fn dot_product_scores() {
        let mut s = EmbeddingState::new(1, 2, params(2), 0).unwrap();
        s.set_user_embedding(0, &[0.6, 0.8]).unwrap();
        s.set_item_embedding(0, &[0.8, 0.6]).unwrap();
        s.set_item_embedding(1, &[-0.8, 0.6]).unwrap();
        assert!((s.predict_score(0, 0) - 0.96).abs() < 1e-12);
        assert!(s.predict_score(0, 1).abs() < 1e-12);
        s.set_item_embedding(1, &[0.6, 0.8]).unwrap();
        assert!((s.predict_score(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_ridge_update() {
        let mut s = EmbeddingState::new(1, 1, params(1), 0).unwrap();
        s.set_item_embedding(0, &[1.0]).unwrap();
        s.ingest_feedback(&[Feedback::new(0, 0, true)]).unwrap();
        assert_eq!(s.user_gram(0), &[2.0]);
        assert_eq!(s.user_rhs(0), &[1.0]);
        // A^{-1} b = 0.5, normalized to 1
        assert_eq!(s.user_embedding(0), &[1.0]);
        assert!((s.user_gram_inv(0)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_targets_keep_previous_embedding() {
        let mut s = EmbeddingState::new(1, 3, params(4), 5).unwrap();
        let before = s.user_embedding(0).to_vec();
        let batch: Vec<_> = (0..3).map(|i| Feedback::new(0, i, false)).collect();
        s.ingest_feedback(&batch).unwrap();
        assert_eq!(s.user_rhs(0), &[0.0; 4]);
        assert_eq!(s.user_embedding(0), before.as_slice());
        assert_eq!(s.user_observations(0), 3);
    }

    #[test]
    fn rejects_non_binary_click_without_mutation() {
        let mut s = EmbeddingState::new(1, 1, params(2), 5).unwrap();
        let before = s.clone();
        let batch = [
            Feedback::new(0, 0, true),
            Feedback {
                user: 0,
                item: 0,
                click: 0.5,
            },
        ];
        assert!(matches!(s.ingest_feedback(&batch), Err(Error::InvalidClick(_))));
        assert_eq!(s, before);
    }

    #[test]
    fn cached_inverse_matches_fresh_inversion() {
        let mut s = EmbeddingState::new(3, 5, params(4), 11).unwrap();
        let batch: Vec<_> = (0..60)
            .map(|k| Feedback::new(k % 3, (k * 7) % 5, k % 2 == 0))
            .collect();
        s.ingest_feedback(&batch).unwrap();
        for u in 0..3 {
            let a = DMatrix::from_row_slice(4, 4, s.user_gram(u));
            let inv = a.try_inverse().unwrap();
            let cached = DMatrix::from_row_slice(4, 4, s.user_gram_inv(u));
            assert!((inv - cached).amax() < 1e-8);
        }
    }

    #[test]
    fn mahalanobis_scaling() {
        let m = [4.0, 0.0, 0.0, 1.0];
        assert!((mahalanobis(&m, &[1.0, 0.0]) - 2.0).abs() < 1e-12);
        assert!((mahalanobis(&m, &[0.0, 3.0]) - 3.0).abs() < 1e-12);
    }
}
