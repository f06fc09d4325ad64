mod common;

use common::*;
use fairloop::dual::{exposure_objective, ideal_exposure, in_feasible_region, project_to_feasible};
use fairloop::mf::{Feedback, MfParams};
use fairloop::oracle::{solve_offline_optimum, BudgetMode};
use fairloop::{Catalog, EmbeddingState, OfflineInstance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(rng: &mut ChaCha8Rng, n_users: usize, n_items: usize, len: usize) -> Vec<Feedback> {
    (0..len)
        .map(|_| Feedback::new(rng.random_range(0..n_users), rng.random_range(0..n_items), rng.random_bool(0.4)))
        .collect()
}

#[test]
fn ridge_matches_dense_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..12u64 {
        let dim = 1 + (case as usize % 8);
        let params = MfParams {
            dim,
            lambda_u: 0.5 + case as f64 * 0.1,
            lambda_i: 1.0,
        };
        let mut state = EmbeddingState::new(5, 7, params, case).unwrap();
        let mut replay = RidgeReplay::from_fresh(&state);
        for _ in 0..3 {
            let batch = random_batch(&mut rng, 5, 7, 40);
            state.ingest_feedback(&batch).unwrap();
            batch.iter().for_each(|fb| replay.apply(fb));
        }
        for u in 0..5 {
            assert!(max_abs_diff(state.user_embedding(u), &replay.user_emb[u]) <= 1e-8);
            assert!(max_abs_diff(state.user_gram(u), &flat(&replay.user_gram[u])) <= 1e-8);
            assert!(max_abs_diff(state.user_rhs(u), &replay.user_rhs[u]) <= 1e-8);
            assert!(max_abs_diff(state.user_gram_inv(u), &flat(&invert(&replay.user_gram[u]))) <= 1e-8);
        }
        for i in 0..7 {
            assert!(max_abs_diff(state.item_embedding(i), &replay.item_emb[i]) <= 1e-8);
            assert!(max_abs_diff(state.item_gram_inv(i), &flat(&invert(&replay.item_gram[i]))) <= 1e-8);
        }
    }
}

#[test]
fn ridge_solution_zeroes_the_objective_gradient() {
    // grad of 1/2 sum (v.x - c)^2 + lambda/2 |v|^2 at v = A^-1 b, with the
    // item embeddings frozen at the values each record saw
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = MfParams {
        dim: 4,
        lambda_u: 0.7,
        lambda_i: 1.0,
    };
    let mut state = EmbeddingState::new(3, 6, params, 2).unwrap();
    let mut replay = RidgeReplay::from_fresh(&state);
    let batch = random_batch(&mut rng, 3, 6, 60);
    state.ingest_feedback(&batch).unwrap();
    batch.iter().for_each(|fb| replay.apply(fb));
    for u in 0..3 {
        let inv = state.user_gram_inv(u);
        let b = state.user_rhs(u);
        let v: Vec<f64> = (0..4).map(|r| (0..4).map(|c| inv[r * 4 + c] * b[c]).sum()).collect();
        let mut grad: Vec<f64> = v.iter().map(|x| 0.7 * x).collect();
        for (x, c) in &replay.user_history[u] {
            let resid = v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - c;
            for r in 0..4 {
                grad[r] += resid * x[r];
            }
        }
        assert!(grad.iter().all(|g| g.abs() < 1e-9), "{grad:?}");
    }
}

fn weighted(mu: &[f64], gamma: &[f64]) -> Vec<f64> {
    mu.iter().zip(gamma).map(|(m, g)| m * g).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_matches_active_set_oracle(
        raw in prop::collection::vec(-2.0f64..1.0, 1..4),
        gamma_seed in prop::collection::vec(0.2f64..3.0, 3),
        lambda in 0.0f64..1.5,
    ) {
        let gamma = &gamma_seed[..raw.len()];
        let got = project_to_feasible(&raw, gamma, lambda);
        let want = project_active_set(&weighted(&raw, gamma), lambda);
        prop_assert!(max_abs_diff(&weighted(&got, gamma), &want) <= 1e-9);
        prop_assert!(in_feasible_region(&got, gamma, lambda));
    }

    #[test]
    fn ideal_exposure_beats_every_box_point(
        mu in prop::collection::vec(-1.0f64..1.0, 1..5),
        beta_seed in prop::collection::vec(-0.5f64..3.0, 4),
        gamma_seed in prop::collection::vec(0.3f64..3.0, 4),
        probe in prop::collection::vec(0.0f64..1.0, 4),
        lambda in 0.1f64..2.0,
    ) {
        let n = mu.len();
        let (beta, gamma) = (&beta_seed[..n], &gamma_seed[..n]);
        let e = ideal_exposure(&mu, beta, gamma, lambda);
        for ((x, b), _) in e.iter().zip(beta).zip(gamma) {
            prop_assert!(*x >= 0.0 && *x <= b.max(0.0) + 1e-12);
        }
        let best = exposure_objective(&e, &mu, gamma, lambda);
        let other: Vec<f64> = probe[..n].iter().zip(beta).map(|(p, b)| p * b.max(0.0)).collect();
        prop_assert!(exposure_objective(&other, &mu, gamma, lambda) <= best + 1e-9);
    }

    #[test]
    fn dp_matches_brute_force(
        seed in any::<u64>(),
        t in 1usize..4,
        k in 1usize..3,
        lambda in 0.0f64..2.0,
        budget_scale in 0.6f64..1.6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let provider_of = vec![0, 0, 1, 2, 1];
        let scores: Vec<Vec<f64>> = (0..t).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
        let gamma: Vec<f64> = [2.0, 2.0, 1.0].iter().map(|g| g * budget_scale * (t * k) as f64 / 3.0).collect();
        let catalog = Catalog::with_budgets(provider_of.clone(), gamma.clone(), k, t).unwrap();
        let inst = OfflineInstance::new(scores.clone(), catalog, lambda).unwrap();
        for (mode, enforce) in [(BudgetMode::Enforced, true), (BudgetMode::Relaxed, false)] {
            let want = brute_force_optimum(&scores, &provider_of, &gamma, k, lambda, enforce);
            match (solve_offline_optimum(&inst, mode), want) {
                (Ok(sol), Some(w)) => {
                    prop_assert!((sol.value - w).abs() <= 1e-12, "{} vs {}", sol.value, w);
                    let realized = inst.realized_objective(&sol.decisions).unwrap();
                    prop_assert!((realized.value - sol.value).abs() <= 1e-12);
                    prop_assert!(!enforce || realized.budget_feasible);
                }
                (Err(fairloop::Error::BudgetInfeasible), None) => {}
                (got, want) => prop_assert!(false, "{got:?} vs {want:?}"),
            }
        }
    }

    #[test]
    fn optimum_invariant_under_item_relabeling(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let provider_of = vec![0, 1, 2, 0, 1, 2];
        let scores: Vec<Vec<f64>> = (0..3).map(|_| (0..6).map(|_| rng.random()).collect()).collect();
        let perm = [4, 2, 5, 0, 3, 1];
        let p_scores: Vec<Vec<f64>> = scores.iter().map(|r| perm.iter().map(|&i| r[i]).collect()).collect();
        let p_providers: Vec<usize> = perm.iter().map(|&i| provider_of[i]).collect();
        let a = Catalog::new(provider_of, 2, 3, None).unwrap();
        let b = Catalog::new(p_providers, 2, 3, None).unwrap();
        let va = solve_offline_optimum(&OfflineInstance::new(scores, a, lambda).unwrap(), BudgetMode::Relaxed).unwrap().value;
        let vb = solve_offline_optimum(&OfflineInstance::new(p_scores, b, lambda).unwrap(), BudgetMode::Relaxed).unwrap().value;
        prop_assert!((va - vb).abs() <= 1e-12);
    }

    #[test]
    fn optimum_nondecreasing_in_each_score(
        seed in any::<u64>(),
        step in 0usize..3,
        item in 0usize..5,
        bump in 0.0f64..0.5,
        lambda in 0.0f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let provider_of = vec![0, 1, 1, 2, 2];
        let scores: Vec<Vec<f64>> = (0..3).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
        let mut higher = scores.clone();
        higher[step][item] += bump;
        let c = Catalog::new(provider_of, 1, 3, Some(2.0)).unwrap();
        let solve = |s: Vec<Vec<f64>>| {
            let inst = OfflineInstance::new(s, c.clone(), lambda).unwrap();
            solve_offline_optimum(&inst, BudgetMode::Enforced).map(|s| s.value)
        };
        if let (Ok(lo), Ok(hi)) = (solve(scores), solve(higher)) {
            prop_assert!(hi >= lo - 1e-12);
        }
    }

    #[test]
    fn accuracy_only_optimum_is_mean_top_k(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<Vec<f64>> = (0..3).map(|_| (0..6).map(|_| rng.random()).collect()).collect();
        // budgets large enough never to bind
        let c = Catalog::with_budgets(vec![0, 1, 2, 0, 1, 2], vec![100.0; 3], k, 3).unwrap();
        let inst = OfflineInstance::new(scores.clone(), c, 0.0).unwrap();
        let v = solve_offline_optimum(&inst, BudgetMode::Enforced).unwrap().value;
        let mean_top: f64 = scores
            .iter()
            .map(|r| {
                let mut s = r.clone();
                s.sort_by(|a, b| b.total_cmp(a));
                s[..k].iter().sum::<f64>()
            })
            .sum::<f64>()
            / 3.0;
        prop_assert!((v - mean_top).abs() <= 1e-12);
    }
}
