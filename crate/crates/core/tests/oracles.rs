// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::*;
use mocpd::config::Window;
use mocpd::dissimilarity::{mmd_score, mmd_unclamped, vae_score};
use mocpd::memory::{centroid, compute_threshold};
use mocpd::newma::Newma;
use mocpd::preprocess::ssa_reconstruct;
use mocpd::{seeded_rng, Measure, NewmaConfig, VaeModel};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn jacobi_oracle_reproduces_a_known_factorisation() {
    // [[3, 0], [4, 5]] has singular values sqrt(45) and sqrt(5).
    let (_, s, _) = jacobi_svd(&[vec![3.0, 0.0], vec![4.0, 5.0]]);
    assert!((s[0] - 45f64.sqrt()).abs() < 1e-12);
    assert!((s[1] - 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ssa_linear_ramp_matches_svd_oracle() {
    for c in [0.01, 1.0, 37.5] {
        let ramp: Vec<f64> = (0..100).map(|t| t as f64 * c).collect();
        let ours = ssa_reconstruct(&ramp, 20, 2).unwrap();
        let oracle = ssa_oracle(&ramp, 20, 2);
        let scale = ramp.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for ((a, b), x) in ours.iter().zip(&oracle).zip(&ramp) {
            assert!((a - x).abs() < 1e-6 * scale, "ramp residual {}", a - x);
            assert!((a - b).abs() < 1e-6 * scale, "oracle gap {}", a - b);
        }
    }
}

#[test]
fn ssa_rank_one_matches_svd_oracle_on_noise() {
    let mut rng = seeded_rng(5);
    let x: Vec<f64> = (0..60).map(|t| (t as f64 * 0.3).sin() + rng.gen_range(-0.5..0.5)).collect();
    let ours = ssa_reconstruct(&x, 12, 1).unwrap();
    let oracle = ssa_oracle(&x, 12, 1);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn mmd_matches_double_loop_on_random_triples() {
    let mut rng = seeded_rng(11);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let sigma = rng.gen_range(0.05..5.0);
        let raw = mmd_unclamped(&w, &m, sigma).unwrap();
        assert!((raw - brute_mmd(&w, &m, sigma)).abs() < 1e-12);
        assert!(raw >= -1e-12);
        assert_eq!(mmd_score(&w, &m, sigma).unwrap(), raw.max(0.0));
    }
}

#[test]
fn mmd_ten_entry_example() {
    let mut rng = seeded_rng(2);
    let w: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
    let got = mmd_score(&w, &m, 0.8).unwrap();
    assert!((got - brute_mmd(&w, &m, 0.8)).abs() < 1e-12);
}

fn toy_batch() -> Vec<Window> {
    vec![
        Window::new(0, vec![0.3, -0.2, 0.8, 0.1, -0.5, 0.4]),
        Window::new(1, vec![1.1, 0.7, -0.3, 0.2, 0.0, -0.9]),
        Window::new(2, vec![-0.4, 0.5, 0.6, -1.2, 0.3, 0.2]),
    ]
}

#[test]
fn vae_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let mut rng = seeded_rng(seed);
        let model = VaeModel::new(6, 2, &mut rng);
        let eps: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
        let err = fd_max_rel_error(&model, &toy_batch(), &eps, 1e-5, 1e-6);
        assert!(err < 1e-4, "seed {seed}: max relative error {err}");
    }
}

#[test]
fn vae_score_matches_forward_pass_oracle() {
    let mut rng = seeded_rng(21);
    let mut model = VaeModel::new(6, 2, &mut rng);
    model.mark_trained();
    let batch = toy_batch();
    let (a, b) = (&batch[0].values, &batch[1].values);
    let (ma, mb) = (vae_mu_oracle(&model, a), vae_mu_oracle(&model, b));
    let expect: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).powi(2)).sum();
    assert!((vae_score(a, b, &model).unwrap() - expect).abs() < 1e-10);
    assert_eq!(model.encode_mean(a).unwrap().len(), 2);
}

#[test]
fn vae_training_loss_settles() {
    let mut rng = seeded_rng(8);
    let mut model = VaeModel::new(6, 2, &mut rng);
    let batch = toy_batch();
    let report = mocpd::vae::vae_train(&mut model, &batch, 100, 0.01, &mut rng).unwrap();
    let l = &report.losses;
    // Mean loss over each 20-epoch block does not rise beyond a 5% band.
    let blocks: Vec<f64> = l.chunks(20).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    for pair in blocks.windows(2) {
        assert!(pair[1] <= pair[0] * 1.05, "blocks {blocks:?}");
    }
}

#[test]
fn centroid_matches_brute_force_sum() {
    let mut rng = seeded_rng(3);
    let windows: Vec<Window> = (0..75)
        .map(|i| Window::new(i, (0..100).map(|_| rng.gen_range(-10.0..10.0)).collect()))
        .collect();
    let ours = centroid(&windows).unwrap();
    for j in 0..100 {
        // Reverse accumulation order on purpose.
        let mut s = 0.0;
        for w in windows.iter().rev() {
            s += w.values[j];
        }
        assert!((ours[j] - s / 75.0).abs() < 1e-12);
    }
}

#[test]
fn threshold_of_one_to_forty_is_156_1() {
    // Window k is constant sqrt(k); against a zero centroid its Mean score is k.
    let windows: Vec<Window> = (1..=40)
        .map(|k| Window::new(k, vec![(k as f64).sqrt(); 3]))
        .collect();
    let c = vec![0.0; 3];
    let t = compute_threshold(&windows, &c, &Measure::Mean, 4.0, 0.975).unwrap();
    let scores: Vec<f64> = (1..=40).map(|k| ((k as f64).sqrt()).powi(2)).collect();
    assert!((t - 4.0 * sorted_quantile(&scores, 0.975)).abs() < 1e-12);
    assert!((t - 156.1).abs() < 1e-9, "{t}");
}

#[test]
fn newma_step_response_matches_recurrence() {
    // A warm-up longer than the run keeps the band infinite: no resets.
    let cfg = NewmaConfig {
        warmup: 10_000,
        ..NewmaConfig::default()
    };
    let mut det = Newma::new(cfg.clone()).unwrap();
    let (mut f, mut s) = (0.0f64, 0.0f64);
    det.update(0.0);
    for i in 0..300 {
        let x = if i < 50 { 0.0 } else { 1.0 };
        let (stat, _, _) = det.update(x);
        f = (1.0 - cfg.lambda_fast) * f + cfg.lambda_fast * x;
        s = (1.0 - cfg.lambda_slow) * s + cfg.lambda_slow * x;
        assert!((stat - (f - s).abs()).abs() < 1e-10);
        if i >= 50 {
            // Closed form after k steps of a unit step.
            let k = (i - 49) as i32;
            let closed = (1.0 - cfg.lambda_slow).powi(k) - (1.0 - cfg.lambda_fast).powi(k);
            assert!((stat - closed).abs() < 1e-10);
        }
    }
}
