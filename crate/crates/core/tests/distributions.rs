//! Monte Carlo checks of the samplers and closed forms.

use proptest::prelude::*;
use statrs::distribution::{Binomial, Discrete, Poisson};
use surreal_ensemble::analysis::tv_distance;
use surreal_ensemble::stochastic::{poisson_sample, predict_next_cdf, seeded_rng, split_sample};
use surreal_ensemble::{SplitKind, SurrealDist};

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn poisson_zero_frequency() {
    let mut rng = seeded_rng(10);
    let n = 100_000;
    let zeros = (0..n).filter(|_| poisson_sample(3.5, &mut rng) == 0).count();
    let p = (-3.5f64).exp();
    let freq = zeros as f64 / n as f64;
    assert!((freq - p).abs() < 3.0 * binomial_se(p, n), "{freq} vs {p}");
}

#[test]
fn poisson_mean_and_shape() {
    let mut rng = seeded_rng(11);
    let n = 100_000;
    let draws: Vec<u32> = (0..n).map(|_| poisson_sample(1.5, &mut rng)).collect();
    let mean = draws.iter().map(|&k| f64::from(k)).sum::<f64>() / n as f64;
    assert!((mean - 1.5).abs() < 3.0 * (1.5f64 / n as f64).sqrt(), "{mean}");

    let oracle = Poisson::new(1.5).unwrap();
    let mut hist = vec![0.0; 20];
    for &k in &draws {
        hist[k as usize] += 1.0 / n as f64;
    }
    let pmf: Vec<f64> = (0..20).map(|k| oracle.pmf(k)).collect();
    assert!(tv_distance(&hist, &pmf) < 0.01);
}

#[test]
fn split_probabilities_match_binomial_oracle() {
    let oracle = Binomial::new(0.5, 4).unwrap();
    for k in 0..=4u32 {
        assert!((SplitKind::Binomial.probability(4, k) - oracle.pmf(u64::from(k))).abs() < 1e-15);
        assert!((SplitKind::Uniform.probability(4, k) - 0.2).abs() < 1e-15);
    }
}

#[test]
fn split_frequencies() {
    let mut rng = seeded_rng(12);
    let n = 100_000;
    for (kind, k, p) in [
        (SplitKind::Uniform, 0, 0.2),
        (SplitKind::Binomial, 0, 1.0 / 16.0),
        (SplitKind::Binomial, 2, 6.0 / 16.0),
    ] {
        let hits = (0..n).filter(|_| split_sample(kind, 4, &mut rng) == k).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - p).abs() < 3.0 * binomial_se(p, n), "{kind} s={k}: {freq} vs {p}");
    }
}

#[test]
fn surreal_sampling_matches_pmf() {
    let d = SurrealDist::new(3.5, 0.8).unwrap();
    let mut rng = seeded_rng(13);
    let n = 1_000_000;
    let mut counts = vec![0usize; 200];
    for _ in 0..n {
        counts[d.sample(&mut rng) as usize] += 1;
    }
    let hist: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    // Bins expected to hold at least 5 draws, then the lumped remainder.
    let body: Vec<usize> = (0..200).filter(|&k| d.pmf(k as u32) * n as f64 >= 5.0).collect();
    let last = *body.last().unwrap();
    for &k in &body {
        let p = d.pmf(k as u32);
        assert!((hist[k] - p).abs() <= 3.0 * binomial_se(p, n), "k={k}: {} vs {p}", hist[k]);
    }
    let rest: f64 = hist[last + 1..].iter().sum();
    let p_rest = 1.0 - d.cdf(last as u32);
    assert!((rest - p_rest).abs() <= 3.0 * binomial_se(p_rest, n), "tail: {rest} vs {p_rest}");
    assert!(tv_distance(&hist, &d.pmf_table()) < 0.005);
}

#[test]
fn pmf_table_sums_to_one() {
    for (lambda, alpha) in [(0.5, 0.2), (1.5, 0.4), (3.5, 0.8), (8.0, 0.95)] {
        let d = SurrealDist::new(lambda, alpha).unwrap();
        let total: f64 = d.pmf_table().iter().sum();
        assert!((total - 1.0).abs() < 1e-11, "{lambda} {alpha}: {total}");
        let explicit: f64 = (0..=2000).map(|k| d.pmf(k)).sum();
        assert!((explicit - 1.0).abs() < 1e-12);
    }
}

/// First `k` from which the geometric tail stays within 10% of the pmf.
fn tail_accuracy_onset(lambda: f64, alpha: f64) -> u32 {
    let pmf = |k: i32| (-lambda * alpha.powi(k)).exp() - (-lambda * alpha.powi(k - 1)).exp();
    let tail = |k: i32| lambda * (1.0 - alpha) * alpha.powi(k - 1);
    let ok = |k: i32| ((pmf(k) - tail(k)) / pmf(k)).abs() < 0.1;
    let last_bad = (1..=80).rev().find(|&k| !ok(k)).unwrap_or(0);
    last_bad as u32 + 1
}

#[test]
fn geometric_tail_accuracy() {
    let d = SurrealDist::new(3.5, 0.8).unwrap();
    let onset = tail_accuracy_onset(3.5, 0.8);
    // Frozen from the direct evaluation above.
    assert_eq!(onset, 17);
    for k in onset..80 {
        let rel = (d.pmf(k) - d.geometric_tail(k)).abs() / d.pmf(k);
        assert!(rel < 0.1, "k={k}: {rel}");
    }
    let rel = (d.pmf(onset - 1) - d.geometric_tail(onset - 1)).abs() / d.pmf(onset - 1);
    assert!(rel >= 0.1);
    println!("geometric tail within 10% of Su(3.5, 0.8) for k >= {onset}");
}

#[test]
fn surreal_cdf_is_a_fixed_point_of_the_clade_map() {
    for (lambda, alpha) in [(3.5, 0.8), (1.5, 0.4), (0.3, 0.1)] {
        let d = SurrealDist::new(lambda, alpha).unwrap();
        let z: Vec<f64> = (0..=60).map(|k| (1.0 - alpha) * f64::powi(alpha, k)).collect();
        for k in 0..=50 {
            let g = predict_next_cdf(&z, lambda, k);
            assert!((g - d.cdf(k as u32 + 1)).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn next_cdf_is_monotone_and_bounded(raw in prop::collection::vec(0.0f64..1.0, 1..30), lambda in 0.01f64..10.0) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let z: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut prev = 0.0;
        for k in 0..z.len() + 3 {
            let g = predict_next_cdf(&z, lambda, k);
            prop_assert!(g >= prev - 1e-15 && g <= 1.0);
            prev = g;
        }
        prop_assert!((predict_next_cdf(&z, lambda, z.len() - 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_differences_are_the_pmf(lambda in 0.01f64..10.0, alpha in 0.01f64..0.99, k in 1u32..200) {
        let d = SurrealDist::new(lambda, alpha).unwrap();
        prop_assert!((d.cdf(k) - d.cdf(k - 1) - d.pmf(k)).abs() < 1e-12);
        prop_assert!(d.cdf(k) >= d.cdf(k - 1));
    }
}
