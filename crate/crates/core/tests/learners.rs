use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqscm::learners::logistic::LogisticProblem;
use seqscm::learners::metrics::{auc, r2};
use seqscm::learners::*;

fn boosted(eta: f64, depth: usize, rounds: usize) -> LearnerSpec {
    LearnerSpec::Boosted {
        n_rounds: rounds,
        eta,
        max_depth: depth,
        min_samples_leaf: 1,
        lambda: 1.0,
        min_child_weight: 1.0,
    }
}

fn forest(min_leaf: usize, seed: u64) -> LearnerSpec {
    LearnerSpec::Forest {
        n_trees: 30,
        max_depth: None,
        min_samples_leaf: min_leaf,
        max_features: MaxFeatures::All,
        bootstrap: true,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // One feature plus intercept: slope = Sxy / (Sxx + alpha) on centered data.
    #[test]
    fn ridge_matches_scalar_closed_form(
        pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        alpha in 0.0f64..50.0,
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        prop_assume!(sxx + alpha > 1e-6);
        let slope = sxy / (sxx + alpha);
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let m = fit_ridge(&Features::from_rows(&rows).unwrap(), &ys, None, alpha).unwrap();
        prop_assert!((m.coef[0] - slope).abs() < 1e-8 * (1.0 + slope.abs()));
        prop_assert!((m.intercept - (my - slope * mx)).abs() < 1e-7 * (1.0 + my.abs() + mx.abs()));
    }

    #[test]
    fn logistic_gradient_matches_finite_differences(seed in 0u64..1000, k in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..25).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<usize> = (0..25).map(|_| rng.random_range(0..k)).collect();
        let w: Vec<f64> = (0..25).map(|_| rng.random_range(0.5..2.0)).collect();
        let x = Features::from_rows(&rows).unwrap();
        let prob = LogisticProblem::new(&x, &y, k, Some(&w), 0.7).unwrap();
        let theta: Vec<f64> = (0..prob.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; theta.len()];
        prob.value_grad(&theta, &mut g);
        let mut scratch = vec![0.0; theta.len()];
        for j in 0..theta.len() {
            let h = 1e-5;
            let mut tp = theta.clone();
            tp[j] += h;
            let fp = prob.value_grad(&tp, &mut scratch);
            tp[j] -= 2.0 * h;
            let fm = prob.value_grad(&tp, &mut scratch);
            let fd = (fp - fm) / (2.0 * h);
            prop_assert!((g[j] - fd).abs() <= 1e-4 * g[j].abs().max(1e-3), "param {}: {} vs {}", j, g[j], fd);
        }
    }

    // Rank-sum AUC against the O(n²) pair count.
    #[test]
    fn auc_matches_pair_count(data in proptest::collection::vec((0u8..6, any::<bool>()), 2..60)) {
        let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
        let pos: Vec<bool> = data.iter().map(|d| d.1).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..data.len() {
            for j in 0..data.len() {
                if pos[i] && !pos[j] {
                    den += 1.0;
                    num += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let expected = if den == 0.0 { 0.5 } else { num / den };
        prop_assert!((auc(&scores, &pos) - expected).abs() < 1e-12);
    }
}

#[test]
fn two_point_ridge_hand_solve() {
    // x = (0, 1), y = (0, 2), alpha = 1: centered Sxx = 0.5, Sxy = 1 -> slope 2/3.
    let x = Features::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    let m = fit_ridge(&x, &[0.0, 2.0], None, 1.0).unwrap();
    assert!((m.coef[0] - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.intercept - (1.0 - 2.0 / 3.0 * 0.5)).abs() < 1e-12);
}

#[test]
fn logistic_optimum_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let y: Vec<usize> = rows
        .iter()
        .map(|r| usize::from(r[0] - r[1] + rng.random_range(-1.0..1.0) > 0.0))
        .collect();
    let x = Features::from_rows(&rows).unwrap();
    let m = fit_logistic(&x, &y, 2, None, 1.0, LbfgsOptions::default()).unwrap();
    let prob = LogisticProblem::new(&x, &y, 2, None, 1.0).unwrap();
    let mut theta = m.coef.clone();
    theta.extend(&m.intercept);
    let mut g = vec![0.0; theta.len()];
    prob.value_grad(&theta, &mut g);
    assert!(g.iter().all(|v| v.abs() < 1e-5), "{g:?}");
}

#[test]
fn boosted_regression_fits_nonlinear_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..2000).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0].sin() * 3.0 + f64::from(r[1] > 0.0)).collect();
    let x = Features::from_rows(&rows).unwrap();
    let m = fit_regressor(&boosted(0.3, 4, 100), &x, &y, None).unwrap();
    assert!(r2(&m.predict_all(&x), &y) > 0.97);
}

#[test]
fn forest_is_deterministic_given_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 + r[1]).collect();
    let x = Features::from_rows(&rows).unwrap();
    let a = fit_regressor(&forest(5, 1), &x, &y, None).unwrap();
    let b = fit_regressor(&forest(5, 1), &x, &y, None).unwrap();
    let c = fit_regressor(&forest(5, 2), &x, &y, None).unwrap();
    assert_eq!(a.predict_all(&x), b.predict_all(&x));
    assert_ne!(a.predict_all(&x), c.predict_all(&x));
    assert!(r2(&a.predict_all(&x), &y) > 0.9);
}

#[test]
fn table_min_samples_leaf_grid_accepted() {
    let rows: Vec<Vec<f64>> = (0..300).map(|i| vec![f64::from(i % 17), f64::from(i % 5)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] + r[1]).collect();
    let x = Features::from_rows(&rows).unwrap();
    let grid: Vec<LearnerSpec> = [5, 10, 20, 50, 100].iter().map(|&m| forest(m, 0)).collect();
    let cv = cross_validate(&grid, &x, CvTarget::Regression(&y), None, 5).unwrap();
    assert_eq!(cv.scores.len(), 5);
}

#[test]
fn ridge_selection_matches_exhaustive_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| r[0] - 2.0 * r[1] + 0.5 * r[3] + rng.random_range(-1.0..1.0))
        .collect();
    let x = Features::from_rows(&rows).unwrap();
    let alphas = [0.01, 0.02, 0.1, 0.2, 1.0, 2.0, 10.0, 20.0, 100.0, 200.0, 1000.0];
    let grid: Vec<LearnerSpec> = alphas.iter().map(|&alpha| LearnerSpec::Ridge { alpha }).collect();
    let (_, cv) = select_regressor(&grid, &x, &y, None, 5).unwrap();
    // Replay each setting fold by fold, independently of cross_validate.
    let folds = contiguous_folds(500, 5).unwrap();
    let replay: Vec<f64> = alphas
        .iter()
        .map(|&alpha| {
            folds
                .iter()
                .map(|&(lo, hi)| {
                    let train: Vec<usize> = (0..lo).chain(hi..500).collect();
                    let test: Vec<usize> = (lo..hi).collect();
                    let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                    let m = fit_ridge(&x.take_rows(&train), &ytr, None, alpha).unwrap();
                    let pred: Vec<f64> = test.iter().map(|&i| m.predict(x.row(i))).collect();
                    let truth: Vec<f64> = test.iter().map(|&i| y[i]).collect();
                    r2(&pred, &truth)
                })
                .sum::<f64>()
                / 5.0
        })
        .collect();
    let best = replay
        .iter()
        .enumerate()
        .fold(0, |b, (i, s)| if *s > replay[b] { i } else { b });
    assert_eq!(cv.selected, best);
    for (a, b) in cv.scores.iter().zip(&replay) {
        assert!((a - b).abs() < 1e-12);
    }
}
