//! Panel simulation and CV-heavy estimation at one worker thread versus the
//! default pool. Build with `--no-default-features` for the rayon-free
//! sequential path; both groups then run the same code.

use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use seqscm::config::Config;
use seqscm::engine::{fit_scm, load_base_dataset, FittedScm, Policy};
use seqscm::learners::{cross_validate, CvTarget, Features, LearnerSpec, MaxFeatures};
use seqscm::par;

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential"
    }
}

fn small_scm() -> FittedScm {
    let config = Config::default_config();
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/adult");
    let base = load_base_dataset(&config, Some(&dir)).expect("Adult data");
    let rows: Vec<usize> = (0..base.n_rows()).step_by(6).collect();
    fit_scm(&config, &base.table.take_rows(&rows)).expect("fit")
}

fn simulation(c: &mut Criterion) {
    let scm = small_scm();
    let threads = [1, par::current_num_threads().max(2)];
    let mut g = c.benchmark_group(format!("simulate_panel/{}", mode()));
    g.sample_size(10);
    for t in threads {
        g.bench_with_input(BenchmarkId::new("threads", t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || scm.simulate_panel(5000, 7, &Policy::Observational, 0).unwrap()))
        });
    }
    g.finish();
}

fn forest_cv(c: &mut Criterion) {
    let rows: Vec<Vec<f64>> = (0..3000)
        .map(|i| (0..8).map(|j| ((i * (j + 3)) % 97) as f64 / 97.0).collect())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] * 3.0 + (r[1] * 6.0).sin() + r[2] * r[3]).collect();
    let x = Features::from_rows(&rows).unwrap();
    let grid: Vec<LearnerSpec> = [5, 20]
        .iter()
        .map(|&m| LearnerSpec::Forest {
            n_trees: 20,
            max_depth: None,
            min_samples_leaf: m,
            max_features: MaxFeatures::Third,
            bootstrap: true,
            seed: 0,
        })
        .collect();
    let mut g = c.benchmark_group(format!("forest_cv/{}", mode()));
    g.sample_size(10);
    for t in [1, par::current_num_threads().max(2)] {
        g.bench_with_input(BenchmarkId::new("threads", t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || cross_validate(&grid, &x, CvTarget::Regression(&y), None, 5).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, simulation, forest_cv);
criterion_main!(benches);
