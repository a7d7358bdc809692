use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqscm::learners::{softmax, LearnerSpec};
use seqscm::noise::derive_noise;
use seqscm::samplers::*;
use seqscm::table::{Table, VariableSchema};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn gumbel_max_follows_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..5 {
        let k = 2 + case;
        let logits: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = softmax(&logits);
        let mut counts = vec![0usize; k];
        for s in 0..40_000u64 {
            let g = derive_noise(case as u64, s, 0, 1).gumbels(k);
            counts[gumbel_max_sample(&logits, &g).unwrap()] += 1;
        }
        let pv = chi_square_p(&counts, &p);
        assert!(pv > 0.001, "case {case}: p = {pv}, counts {counts:?}, probs {p:?}");
    }
}

#[test]
fn masked_gumbel_renormalizes() {
    let logits = [0.3, 1.0, -0.5, 0.2];
    let allowed = |j: usize| j != 1;
    let kept: Vec<f64> = [0.3, -0.5, 0.2].to_vec();
    let p = softmax(&kept);
    let mut counts = [0usize; 3];
    for s in 0..30_000u64 {
        let g = derive_noise(9, s, 3, 2).gumbels(4);
        let j = masked_argmax(&logits, &g, allowed);
        assert_ne!(j, 1);
        counts[[0, 0, 1, 2][j]] += 1;
    }
    assert!(chi_square_p(&counts, &p) > 0.001);
}

fn synthetic_table(n: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let group: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..3u8))).collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = group
        .iter()
        .zip(&x)
        .map(|(g, x)| 2.0 * g + x + rng.random_range(-0.5..0.5))
        .collect();
    let cap: Vec<f64> = group
        .iter()
        .map(|g| {
            if rng.random_bool(0.1 + 0.25 * g) {
                1000.0 + 500.0 * g + rng.random_range(-100.0..100.0)
            } else {
                0.0
            }
        })
        .collect();
    Table::from_columns(
        vec![
            VariableSchema::categorical("g", vec!["a".into(), "b".into(), "c".into()], "").unwrap(),
            VariableSchema::continuous("x", ""),
            VariableSchema::continuous("y", ""),
            VariableSchema::continuous("cap", "USD"),
        ],
        vec![group, x, y, cap],
    )
    .unwrap()
}

#[test]
fn zero_inflation_matches_gate_probability() {
    let t = synthetic_table(3000);
    let s = fit_zero_inflated_sampler(
        &t,
        "cap",
        &["g", "x"],
        &LearnerSpec::Logistic { c: 1.0, max_iter: 500 },
        &LearnerSpec::Ridge { alpha: 1.0 },
        1.0,
    )
    .unwrap();
    let n = 10_000;
    let mut zeros = 0;
    let mut gate = 0.0;
    for i in 0..n {
        let row = t.row(i % t.n_rows());
        gate += 1.0 - s.gate_prob(&row).unwrap();
        if s.sample(&row, &mut derive_noise(1, i as u64, 3, 1)).unwrap() == 0.0 {
            zeros += 1;
        }
    }
    let rate = zeros as f64 / n as f64;
    assert!((rate - gate / n as f64).abs() < 0.02, "{rate} vs {}", gate / n as f64);
}

#[test]
fn continuous_noise_is_gaussian_around_mean() {
    let t = synthetic_table(2000);
    let s = fit_continuous_sampler(&t, "y", &["g", "x"], &LearnerSpec::Ridge { alpha: 0.1 }, 1.0).unwrap();
    assert!(s.r2 > 0.9);
    let row = t.row(0);
    let mu = s.mean(&row).unwrap();
    let draws: Vec<f64> = (0..5000u64)
        .map(|i| (s.sample(&row, &mut derive_noise(2, i, 2, 1)).unwrap() - mu) / s.sigma)
        .collect();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let d = ks_statistic(draws, |x| std_normal.cdf(x));
    // 0.1% critical value is about 1.95 / sqrt(n).
    assert!(d < 1.95 / (5000f64).sqrt(), "KS D = {d}");
}

#[test]
fn empirical_sampler_reproduces_training_distribution() {
    let values: Vec<f64> = (0..500).map(|i| f64::from(17 + (i * 7919) % 73)).collect();
    let s = EmpiricalSampler::fit(&values).unwrap();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let ecdf = |x: f64| sorted.iter().filter(|v| **v <= x).count() as f64 / sorted.len() as f64;
    let draws: Vec<f64> = (0..5000u64).map(|i| s.sample(&mut derive_noise(3, i, 0, 1))).collect();
    // Discrete support: compare the two step functions at the support points.
    let mut d: f64 = 0.0;
    for &v in &sorted {
        let emp = draws.iter().filter(|x| **x <= v).count() as f64 / draws.len() as f64;
        d = d.max((emp - ecdf(v)).abs());
    }
    assert!(d < 1.95 / (5000f64).sqrt(), "D = {d}");
}

#[test]
fn categorical_sampler_tracks_classifier_probabilities() {
    let t = synthetic_table(2000);
    let s = fit_categorical_sampler(&t, "g", &["y"], &LearnerSpec::Logistic { c: 1.0, max_iter: 500 }).unwrap();
    let row = t.row(5);
    let p = s.proba(&row).unwrap();
    let mut counts = [0usize; 3];
    for i in 0..20_000u64 {
        counts[s.sample(&row, &mut derive_noise(4, i, 0, 1)).unwrap() as usize] += 1;
    }
    // Guard against classes with vanishing mass, which the chi-square cannot test.
    let keep: Vec<usize> = (0..3).filter(|&c| p[c] * 20_000.0 > 5.0).collect();
    let pk: Vec<f64> = keep.iter().map(|&c| p[c]).collect();
    let tot: f64 = pk.iter().sum();
    let ck: Vec<usize> = keep.iter().map(|&c| counts[c]).collect();
    assert!(chi_square_p(&ck, &pk.iter().map(|v| v / tot).collect::<Vec<_>>()) > 0.001);
}
