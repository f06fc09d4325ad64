//! Fixtures shared by the benchmarks.

use fairloop::mf::{Feedback, MfParams};
use fairloop::{Catalog, EmbeddingState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Round-robin provider assignment with default budgets.
pub fn catalog(n_items: usize, n_providers: usize, k: usize, t: usize) -> Catalog {
    Catalog::new((0..n_items).map(|i| i % n_providers).collect(), k, t, None).expect("valid catalog")
}

pub fn random_feedback(n_users: usize, n_items: usize, len: usize, seed: u64) -> Vec<Feedback> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Feedback::new(rng.random_range(0..n_users), rng.random_range(0..n_items), rng.random_bool(0.3)))
        .collect()
}

/// Embedding state that has already seen `warm` random records.
pub fn warm_state(n_users: usize, n_items: usize, dim: usize, warm: usize) -> EmbeddingState {
    let params = MfParams {
        dim,
        ..MfParams::default()
    };
    let mut s = EmbeddingState::new(n_users, n_items, params, 7).expect("valid parameters");
    s.ingest_feedback(&random_feedback(n_users, n_items, warm, 8))
        .expect("indices in range");
    s
}
