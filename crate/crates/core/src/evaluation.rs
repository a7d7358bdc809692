//! Benchmark tasks, effect metrics with bootstrap intervals, and report files.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BenchmarkConfig, Config};
use crate::data::{cohort_stats, compare_stats, quantile_sorted, write_comparison_csv, StatRow};
use crate::engine::{write_json, CateBenchmark, CrossSection, FittedScm};
use crate::error::{Error, Result};
use crate::estimators::{CvMetric, EffectEstimate, EstimationContext, EstimationTable, EstimatorSettings, EstimatorSpec};
use crate::graph::{AdjustmentMode, TimedVar};
use crate::noise::index_below;
use crate::par;

/// Number of education levels, and so of Task-3 bins.
pub const EDUCATION_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u8,
    /// Cross-section columns used for adjustment.
    pub adjustment: Vec<String>,
    /// What the CATE is expressed over.
    pub conditioning: Vec<String>,
    /// Number of education bins the CATE is aggregated into (Task 3).
    pub bins: Option<usize>,
}

/// Cross-section column name of a timed variable: `name` at t0, `name_prev` at t0 - 1.
fn column_name(tv: &TimedVar, t0: usize) -> Result<String> {
    if tv.t == t0 {
        Ok(tv.variable.clone())
    } else if tv.t + 1 == t0 {
        Ok(format!("{}_prev", tv.variable))
    } else {
        Err(Error::config(format!("{tv} is not available in the cross-section")))
    }
}

fn timed(name: &str, t0: usize) -> TimedVar {
    match name.strip_suffix("_prev") {
        Some(v) => TimedVar::new(v, t0 - 1),
        None => TimedVar::new(name, t0),
    }
}

/// Build the spec of task 1, 2 or 3 against a cross-section layout. Task 1
/// adjusts for every covariate column, Task 2 for the direct causes of the
/// treatment, Task 3 reuses Task 1 and stratifies by education. Both sets
/// are checked with the backdoor criterion on the unrolled graph.
pub fn task_spec(id: u8, scm: &FittedScm, cs: &CrossSection) -> Result<TaskSpec> {
    let sim = &scm.config.simulation;
    let (t0, h) = (sim.t0, sim.horizon);
    let treatment = TimedVar::new(&sim.treatment, t0);
    let outcome = TimedVar::new(&sim.outcome, h);
    let full: Vec<String> = cs.covariates.schema().iter().map(|s| s.name.clone()).collect();
    let adjustment = match id {
        1 | 3 => full.clone(),
        2 => scm
            .graph
            .adjustment_set(&treatment, &outcome, AdjustmentMode::Minimal)?
            .members
            .iter()
            .map(|tv| column_name(tv, t0))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::config(format!("task must be 1, 2 or 3, got {id}"))),
    };
    for c in &adjustment {
        if !full.contains(c) {
            return Err(Error::config(format!("adjustment column {c} is missing from the cross-section")));
        }
    }
    let set: Vec<TimedVar> = adjustment.iter().map(|c| timed(c, t0)).collect();
    if !scm.graph.is_backdoor_set(&treatment, &outcome, &set)? {
        return Err(Error::config(format!("task {id} adjustment set fails the backdoor criterion")));
    }
    Ok(TaskSpec {
        id,
        conditioning: if id == 3 { vec!["education_num".into()] } else { adjustment.clone() },
        adjustment,
        bins: (id == 3).then_some(EDUCATION_BINS),
    })
}

/// Coefficient of determination of `pred` against `truth`.
pub fn r2_cate(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || truth.len() < 2 {
        return Err(Error::data(format!(
            "r2: need equal lengths >= 2, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let r = r2_raw(pred, truth);
    if r.is_nan() {
        return Err(Error::numeric("r2: ground truth has zero variance"));
    }
    Ok(r)
}

fn r2_raw(pred: &[f64], truth: &[f64]) -> f64 {
    let m = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - m).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum();
    if ss_tot == 0.0 {
        f64::NAN
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Statistics over `iterations` resamples (with replacement) of `0..n`.
/// Row `b` holds the statistics of draw `b`; draws depend only on `seed`.
pub fn bootstrap_distribution<F>(n: usize, iterations: usize, seed: u64, stats: F) -> Vec<Vec<f64>>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync + Send,
{
    par::map_range(iterations, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let idx: Vec<usize> = (0..n).map(|_| index_below(&mut rng, n)).collect();
        stats(&idx)
    })
}

/// Percentile interval of finite values; NaN bounds if none are finite.
pub fn percentile_interval(values: &[f64], alpha: f64) -> (f64, f64) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    (quantile_sorted(&v, alpha / 2.0), quantile_sorted(&v, 1.0 - alpha / 2.0))
}

/// Percentile bootstrap interval of one statistic over resampled rows.
pub fn bootstrap_ci<F>(n: usize, iterations: usize, alpha: f64, seed: u64, stat: F) -> Result<(f64, f64)>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    if n == 0 || iterations == 0 {
        return Err(Error::data("bootstrap needs data and at least one iteration"));
    }
    let draws: Vec<f64> = bootstrap_distribution(n, iterations, seed, |idx| vec![stat(idx)])
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok(percentile_interval(&draws, alpha))
}

/// Point value and bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// The percentile interval widened, if needed, to contain the point value.
    fn around(value: f64, (lo, hi): (f64, f64)) -> Self {
        Self {
            value,
            lo: lo.min(value),
            hi: hi.max(value),
        }
    }
}

/// Per-bin means of predicted and true effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedCate {
    /// Bin labels 1..=bins.
    pub levels: Vec<usize>,
    pub counts: Vec<usize>,
    pub pred_mean: Vec<Option<f64>>,
    pub truth_mean: Vec<Option<f64>>,
    /// Levels without subjects, left out of the R².
    pub excluded: Vec<usize>,
    /// R² of the bin prediction means against the bin truth means.
    pub r2: f64,
}

fn bin_means(values: &[f64], bins: &[usize], idx: &[usize], k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut n = vec![0usize; k];
    let mut s = vec![0.0; k];
    for &i in idx {
        n[bins[i]] += 1;
        s[bins[i]] += values[i];
    }
    (n, s)
}

fn bin_index(education_num: &[f64], bins: usize) -> Result<Vec<usize>> {
    education_num
        .iter()
        .map(|&e| {
            if e >= 1.0 && e <= bins as f64 && e.fract() == 0.0 {
                Ok(e as usize - 1)
            } else {
                Err(Error::data(format!("education level {e} outside 1..={bins}")))
            }
        })
        .collect()
}

fn stratified_r2(pred: &[f64], truth: &[f64], bins: &[usize], idx: &[usize], k: usize) -> f64 {
    let (n, sp) = bin_means(pred, bins, idx, k);
    let (_, st) = bin_means(truth, bins, idx, k);
    let mut p = Vec::with_capacity(k);
    let mut t = Vec::with_capacity(k);
    for b in 0..k {
        if n[b] > 0 {
            p.push(sp[b] / n[b] as f64);
            t.push(st[b] / n[b] as f64);
        }
    }
    if t.len() < 2 {
        f64::NAN
    } else {
        r2_raw(&p, &t)
    }
}

/// Aggregate per-subject predictions and true effects into education bins.
pub fn stratified_cate(pred: &[f64], truth: &[f64], education_num: &[f64], bins: usize) -> Result<StratifiedCate> {
    if pred.len() != truth.len() || pred.len() != education_num.len() {
        return Err(Error::data("stratified CATE: length mismatch"));
    }
    let b = bin_index(education_num, bins)?;
    let all: Vec<usize> = (0..pred.len()).collect();
    let (counts, sp) = bin_means(pred, &b, &all, bins);
    let (_, st) = bin_means(truth, &b, &all, bins);
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    Ok(StratifiedCate {
        levels: (1..=bins).collect(),
        pred_mean: sp.iter().zip(&counts).map(|(s, n)| mean(*s, *n)).collect(),
        truth_mean: st.iter().zip(&counts).map(|(s, n)| mean(*s, *n)).collect(),
        excluded: (1..=bins).filter(|l| counts[l - 1] == 0).collect(),
        r2: stratified_r2(pred, truth, &b, &all, bins),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub estimator: String,
    pub label: String,
    pub ate: f64,
    /// R² of the CATE (Task 3: of the bin means); absent for ATE-only estimators.
    pub r2_cate: Option<Interval>,
    /// Absent in Task 3.
    pub ae_ate: Option<Interval>,
    pub cv_metric: Option<CvMetric>,
    pub cv_score: Option<f64>,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: u8,
    pub truth_ate: f64,
    pub n_train: usize,
    pub n_eval: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn row(&self, estimator: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }
}

/// Score fitted estimates against per-subject true effects on the evaluation
/// cohort. `bins` switches to Task-3 scoring on education bins.
pub fn score_estimates(
    task: u8,
    specs: &[EstimatorSpec],
    estimates: &[EffectEstimate],
    truth: &[f64],
    education_num: Option<&[f64]>,
    n_train: usize,
    cfg: &BenchmarkConfig,
) -> Result<MetricReport> {
    if truth.is_empty() {
        return Err(Error::data("missing ground-truth effects"));
    }
    let stratify = match education_num {
        Some(e) => Some(bin_index(e, EDUCATION_BINS)?),
        None => None,
    };
    for est in estimates {
        if let Some(c) = &est.cate {
            if c.len() != truth.len() {
                return Err(Error::data(format!(
                    "{}: {} CATE values for {} evaluation subjects",
                    est.estimator,
                    c.len(),
                    truth.len()
                )));
            }
        }
    }
    let k = EDUCATION_BINS;
    let mean_over = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
    let r2_over = |c: &[f64], idx: &[usize]| match &stratify {
        Some(b) => stratified_r2(c, truth, b, idx, k),
        None => {
            let p: Vec<f64> = idx.iter().map(|&i| c[i]).collect();
            let t: Vec<f64> = idx.iter().map(|&i| truth[i]).collect();
            r2_raw(&p, &t)
        }
    };
    // Per estimator: [r2, ae] for each bootstrap draw.
    let draws = bootstrap_distribution(truth.len(), cfg.bootstrap_iterations, cfg.bootstrap_seed, |idx| {
        let t = mean_over(truth, idx);
        estimates
            .iter()
            .flat_map(|e| match &e.cate {
                Some(c) => [r2_over(c, idx), (mean_over(c, idx) - t).abs()],
                None => [f64::NAN, (e.ate - t).abs()],
            })
            .collect()
    });
    let all: Vec<usize> = (0..truth.len()).collect();
    let truth_ate = mean_over(truth, &all);
    let rows = specs
        .iter()
        .zip(estimates)
        .enumerate()
        .map(|(j, (spec, e))| {
            let column = |m: usize| -> Vec<f64> { draws.iter().map(|d| d[2 * j + m]).collect() };
            let r2_cate = match (&e.cate, spec.has_cate()) {
                (Some(c), true) => Some(Interval::around(r2_over(c, &all), percentile_interval(&column(0), cfg.alpha))),
                _ => None,
            };
            let ae_ate = (stratify.is_none())
                .then(|| Interval::around((e.ate - truth_ate).abs(), percentile_interval(&column(1), cfg.alpha)));
            MetricRow {
                estimator: spec.name(),
                label: spec.label(),
                ate: e.ate,
                r2_cate,
                ae_ate,
                cv_metric: e.cv_metric,
                cv_score: e.cv_score,
                selected: e.selected.clone(),
            }
        })
        .collect();
    Ok(MetricReport {
        task,
        truth_ate,
        n_train,
        n_eval: truth.len(),
        iterations: cfg.bootstrap_iterations,
        alpha: cfg.alpha,
        rows,
    })
}

/// Fit every estimator on the task's adjustment set, predicting CATEs on the
/// counterfactual cohort.
pub fn fit_task_estimators(
    task: &TaskSpec,
    bench: &CateBenchmark,
    specs: &[EstimatorSpec],
    settings: &EstimatorSettings,
) -> Result<Vec<EffectEstimate>> {
    let cols: Vec<&str> = task.adjustment.iter().map(String::as_str).collect();
    let table = EstimationTable::from_cross_section(&bench.observational, &cols)?
        .with_conditioning(task.conditioning.clone());
    let eval = bench.cohort.covariates.select(&cols)?;
    let ctx = EstimationContext::new(&table, Some(&eval), settings)?;
    specs
        .iter()
        .map(|s| {
            let start = std::time::Instant::now();
            let est = ctx.run(s)?;
            log::info!(
                "task {}: {} ate {:.1} in {:.1}s",
                task.id,
                s.name(),
                est.ate,
                start.elapsed().as_secs_f64()
            );
            Ok(est)
        })
        .collect()
}

/// Everything produced for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRun {
    pub spec: TaskSpec,
    pub report: MetricReport,
    #[serde(skip)]
    pub estimates: Vec<EffectEstimate>,
    /// Task 3 only: bin means for the truth and each CATE estimator.
    pub stratified: Vec<(String, StratifiedCate)>,
}

/// Run the requested tasks. Task 3 reuses the Task-1 fits.
pub fn run_tasks(
    scm: &FittedScm,
    bench: &CateBenchmark,
    tasks: &[u8],
    specs: &[EstimatorSpec],
    config: &Config,
) -> Result<Vec<TaskRun>> {
    let settings = EstimatorSettings::from_config(config);
    let cfg = &config.benchmark;
    let mut task1: Option<Vec<EffectEstimate>> = None;
    let mut out = Vec::new();
    for &id in tasks {
        let spec = task_spec(id, scm, &bench.observational)?;
        let estimates = match (id, &task1) {
            (3, Some(e)) => e.clone(),
            _ => fit_task_estimators(&spec, bench, specs, &settings)?,
        };
        if id != 2 && task1.is_none() {
            task1 = Some(estimates.clone());
        }
        let edu = (id == 3).then_some(bench.cohort.education_num.as_slice());
        let report = score_estimates(id, specs, &estimates, &bench.effects, edu, bench.observational.len(), cfg)?;
        let stratified = if id == 3 {
            specs
                .iter()
                .zip(&estimates)
                .filter(|(s, _)| s.has_cate())
                .filter_map(|(s, e)| e.cate.as_ref().map(|c| (s, c)))
                .map(|(s, c)| Ok((s.name(), stratified_cate(c, &bench.effects, &bench.cohort.education_num, EDUCATION_BINS)?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let report = if id == 3 {
            MetricReport {
                rows: report.rows.into_iter().filter(|r| r.r2_cate.is_some()).collect(),
                ..report
            }
        } else {
            report
        };
        out.push(TaskRun {
            spec,
            report,
            estimates,
            stratified,
        });
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(report: &MetricReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "estimator",
        "label",
        "ate",
        "r2_cate",
        "r2_lo",
        "r2_hi",
        "ae_ate",
        "ae_lo",
        "ae_hi",
        "cv_metric",
        "cv_score",
        "selected",
    ])?;
    for r in &report.rows {
        let r2 = r.r2_cate;
        let ae = r.ae_ate;
        w.write_record([
            r.estimator.clone(),
            r.label.clone(),
            format!("{}", r.ate),
            fmt_opt(r2.map(|i| i.value)),
            fmt_opt(r2.map(|i| i.lo)),
            fmt_opt(r2.map(|i| i.hi)),
            fmt_opt(ae.map(|i| i.value)),
            fmt_opt(ae.map(|i| i.lo)),
            fmt_opt(ae.map(|i| i.hi)),
            match r.cv_metric {
                Some(CvMetric::Auc) => "auc".into(),
                Some(CvMetric::R2) => "r2".into(),
                None => String::new(),
            },
            fmt_opt(r.cv_score),
            r.selected.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("report", e))?;
    Ok(())
}

/// Figure data: one row per education bin, the true bin effect, then one
/// column per estimator.
pub fn write_plot_csv<W: Write>(strata: &[(String, StratifiedCate)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["education_bin".to_string(), "ground_truth".to_string()];
    header.extend(strata.iter().map(|(n, _)| n.clone()));
    w.write_record(&header)?;
    let Some((_, first)) = strata.first() else {
        w.flush().map_err(|e| Error::io("plot", e))?;
        return Ok(());
    };
    for (b, level) in first.levels.iter().enumerate() {
        let mut rec = vec![level.to_string(), fmt_opt(first.truth_mean[b])];
        rec.extend(strata.iter().map(|(_, s)| fmt_opt(s.pred_mean[b])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("plot", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub config_digest: String,
    pub seed_obs: u64,
    pub seed_cf: u64,
    pub grid_seed: u64,
    pub bootstrap_seed: u64,
    pub estimator_seed: u64,
    pub truth_ate: f64,
    pub tasks: Vec<TaskSpec>,
    pub estimators: Vec<String>,
    pub excluded_bins: Vec<usize>,
    /// Seconds since the Unix epoch; the only field that changes between identical runs.
    pub created_unix: u64,
}

/// Write `task{id}.csv` per task, `task3_plot.csv` when Task 3 ran,
/// `cohort_stats.csv` when a comparison is supplied, and `manifest.json`.
pub fn emit_report(
    runs: &[TaskRun],
    bench: &CateBenchmark,
    config: &Config,
    cohort: Option<&[StatRow]>,
    dir: &Path,
) -> Result<Manifest> {
    if runs.is_empty() {
        return Err(Error::config("no task reports to emit"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
        let p = dir.join(name);
        std::fs::File::create(&p)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    let mut excluded = Vec::new();
    for run in runs {
        write_report_csv(&run.report, create(&format!("task{}.csv", run.spec.id))?)?;
        if run.spec.id == 3 {
            write_plot_csv(&run.stratified, create("task3_plot.csv")?)?;
            if let Some((_, s)) = run.stratified.first() {
                excluded = s.excluded.clone();
            }
        }
    }
    if let Some(rows) = cohort {
        write_comparison_csv(rows, create("cohort_stats.csv")?)?;
    }
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_digest: bench.config_digest.clone(),
        seed_obs: bench.seed_obs,
        seed_cf: bench.seed_cf,
        grid_seed: config.benchmark.grid_seed,
        bootstrap_seed: config.benchmark.bootstrap_seed,
        estimator_seed: config.estimators.seed,
        truth_ate: bench.ate,
        tasks: runs.iter().map(|r| r.spec.clone()).collect(),
        estimators: runs[0].report.rows.iter().map(|r| r.estimator.clone()).collect(),
        excluded_bins: excluded,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Simulated t=1 cohort against the cleaned Adult table.
pub fn cohort_comparison(scm: &FittedScm, adult: &crate::table::Table, n: usize, seed: u64) -> Result<Vec<StatRow>> {
    let panel = scm.simulate_panel(n, 1, &crate::engine::Policy::Observational, seed)?;
    let sim = cohort_stats(&panel.slice(1)?)?;
    let real = cohort_stats(adult)?;
    Ok(compare_stats(&sim, &real))
}
