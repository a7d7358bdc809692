use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;

use seqscm::config::Config;
use seqscm::data::write_comparison_csv;
use seqscm::engine::{build_cate_benchmark, fit_scm, load_base_dataset, BenchmarkOptions, CateBenchmark, FittedScm, Policy};
use seqscm::error::{Error, Result};
use seqscm::estimators::EstimatorSpec;
use seqscm::evaluation::{cohort_comparison, emit_report, run_tasks, TaskRun};

/// Sequential SCM simulator fit to the Adult census data, with a
/// treatment-effect estimator benchmark.
#[derive(Parser)]
#[command(name = "seqscm", version)]
struct Cli {
    /// YAML config; the bundled default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding adult.data (and adult.test).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the SCM and save it as JSON.
    Fit {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Simulate a panel, optionally under an atomic intervention.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Atomic intervention VAR=VALUE@T, e.g. "studies=No studies@2".
        #[arg(long)]
        intervene: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Build the observational table and the coupled counterfactual arms.
    Benchmark {
        #[command(flatten)]
        model: ModelArgs,
        /// Subjects per panel (observational and counterfactual).
        #[arg(long)]
        n: Option<usize>,
        /// Observational seed; the counterfactual seed comes from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit estimators on a benchmark and score them.
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        /// benchmark.json written by `benchmark`.
        #[arg(long)]
        benchmark: PathBuf,
        #[command(flatten)]
        selection: Selection,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write report tables, plot data and manifest. Without --runs the
    /// whole pipeline (fit, benchmark, estimate) runs first.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        /// runs.json written by `estimate`.
        #[arg(long, requires = "benchmark")]
        runs: Option<PathBuf>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[command(flatten)]
        selection: Selection,
        /// Cohort size for the simulated-vs-Adult table.
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare a simulated t=1 cohort with the cleaned Adult table.
    Stats {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Fitted SCM (scm.json); fit from the data when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct Selection {
    /// Task ids; all three when omitted.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=3))]
    task: Vec<u8>,
    /// Comma-separated estimator names; the config's list when omitted.
    #[arg(long, value_delimiter = ',')]
    estimators: Vec<String>,
}

impl Selection {
    fn tasks(&self) -> Vec<u8> {
        if self.task.is_empty() {
            vec![1, 2, 3]
        } else {
            self.task.clone()
        }
    }

    fn specs(&self, config: &Config) -> Result<Vec<EstimatorSpec>> {
        let names = if self.estimators.is_empty() { &config.estimators.enabled } else { &self.estimators };
        names.iter().map(|n| EstimatorSpec::parse(n)).collect()
    }
}

struct Ctx {
    config: Config,
    data: Option<PathBuf>,
}

impl Ctx {
    fn scm(&self, model: &ModelArgs) -> Result<FittedScm> {
        match &model.model {
            Some(path) => {
                let scm = FittedScm::load(path)?;
                info!("loaded model {} ({})", path.display(), &scm.digest()[..12]);
                Ok(scm)
            }
            None => {
                let base = load_base_dataset(&self.config, self.data.as_deref())?;
                info!("fitting on {} Adult rows", base.n_rows());
                fit_scm(&self.config, &base.table)
            }
        }
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(BufWriter::new(f), value)?;
    Ok(())
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

fn parse_intervention(scm: &FittedScm, text: &str) -> Result<Policy> {
    let bad = || Error::config(format!("intervention {text:?} is not VAR=VALUE@T"));
    let (var, rest) = text.split_once('=').ok_or_else(bad)?;
    let (value, t) = rest.rsplit_once('@').ok_or_else(bad)?;
    let t: usize = t.trim().parse().map_err(|_| bad())?;
    scm.atomic(var.trim(), t, value.trim())
}

fn benchmark(ctx: &Ctx, scm: &FittedScm, n: Option<usize>, seed: Option<u64>) -> Result<CateBenchmark> {
    let mut opts = BenchmarkOptions::from_config(&ctx.config);
    if let Some(n) = n {
        opts.n_obs = n;
        opts.n_cf = n;
    }
    if let Some(s) = seed {
        opts.seed_obs = s;
    }
    let b = build_cate_benchmark(scm, &opts)?;
    info!(
        "benchmark: {} observational rows ({} dropped), {} counterfactual subjects, true ATE {:.0}",
        b.observational.len(),
        b.observational.dropped,
        b.effects.len(),
        b.ate
    );
    Ok(b)
}

fn write_runs(runs: &[TaskRun], out: &Path) -> Result<()> {
    save_json(&out.join("runs.json"), &runs)?;
    for r in runs {
        for row in &r.report.rows {
            println!(
                "task {} {:<12} ate {:>10.0}  r2 {:>7}  ae {:>8}  cv {}",
                r.spec.id,
                row.estimator,
                row.ate,
                row.r2_cate.map(|i| format!("{:.3}", i.value)).unwrap_or_else(|| "-".into()),
                row.ae_ate.map(|i| format!("{:.0}", i.value)).unwrap_or_else(|| "-".into()),
                row.cv_score.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default_config(),
    };
    let ctx = Ctx { config, data: cli.data };
    match cli.command {
        Command::Fit { out } => {
            let scm = ctx.scm(&ModelArgs { model: None })?;
            mkdir(&out)?;
            scm.save(out.join("scm.json"))?;
            for d in &scm.diagnostics {
                println!("{:<16} {:<24} {} {}", d.variable, d.sampler, d.metric, d.value.map(|v| format!("{v:.3}")).unwrap_or_default());
            }
            println!("model {} -> {}", &scm.digest()[..12], out.join("scm.json").display());
        }
        Command::Simulate {
            model,
            n,
            horizon,
            seed,
            intervene,
            out,
        } => {
            let scm = ctx.scm(&model)?;
            let sim = &ctx.config.simulation;
            let policy = match &intervene {
                Some(text) => parse_intervention(&scm, text)?,
                None => Policy::Observational,
            };
            let panel = scm.simulate_panel(n.unwrap_or(sim.n_obs), horizon.unwrap_or(sim.horizon), &policy, seed.unwrap_or(sim.seed_obs))?;
            panel.export(&out, "panel")?;
            println!("{} subjects x {} steps, {} -> {}", panel.n, panel.horizon, policy.describe(), out.join("panel.csv").display());
        }
        Command::Benchmark { model, n, seed, out } => {
            let scm = ctx.scm(&model)?;
            let b = benchmark(&ctx, &scm, n, seed)?;
            mkdir(&out)?;
            let meta = serde_json::json!({
                "seed_obs": b.seed_obs,
                "seed_cf": b.seed_cf,
                "config_digest": b.config_digest,
                "true_ate": b.ate,
            });
            b.observational.export(&out, "observational", &meta)?;
            b.cohort.export(&out, "cohort", &meta)?;
            save_json(&out.join("benchmark.json"), &b)?;
            println!("true ATE {:.0} -> {}", b.ate, out.join("benchmark.json").display());
        }
        Command::Estimate {
            model,
            benchmark: path,
            selection,
            out,
        } => {
            let scm = ctx.scm(&model)?;
            let b: CateBenchmark = load_json(&path)?;
            if b.config_digest != scm.config_digest {
                return Err(Error::config("benchmark was built from a different config than the model"));
            }
            let runs = run_tasks(&scm, &b, &selection.tasks(), &selection.specs(&ctx.config)?, &ctx.config)?;
            mkdir(&out)?;
            write_runs(&runs, &out)?;
        }
        Command::Report {
            model,
            runs,
            benchmark: bench_path,
            selection,
            n,
            out,
        } => {
            let scm = ctx.scm(&model)?;
            let b = match &bench_path {
                Some(p) => load_json(p)?,
                None => benchmark(&ctx, &scm, None, None)?,
            };
            let runs: Vec<TaskRun> = match &runs {
                Some(p) => load_json(p)?,
                None => run_tasks(&scm, &b, &selection.tasks(), &selection.specs(&ctx.config)?, &ctx.config)?,
            };
            mkdir(&out)?;
            let adult = load_base_dataset(&ctx.config, ctx.data.as_deref())?;
            let cohort = cohort_comparison(&scm, &adult.table, n, ctx.config.simulation.seed_obs)?;
            write_runs(&runs, &out)?;
            let manifest = emit_report(&runs, &b, &ctx.config, Some(&cohort), &out)?;
            println!("report for tasks {:?} -> {}", manifest.tasks.iter().map(|t| t.id).collect::<Vec<_>>(), out.display());
        }
        Command::Stats { model, n, seed, out } => {
            let scm = ctx.scm(&model)?;
            let adult = load_base_dataset(&ctx.config, ctx.data.as_deref())?;
            let rows = cohort_comparison(&scm, &adult.table, n, seed)?;
            mkdir(&out)?;
            let path = out.join("cohort_stats.csv");
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_comparison_csv(&rows, BufWriter::new(f))?;
            for r in &rows {
                let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
                println!("{:<16} {:<28} {:>12} {:>12}", r.variable, r.category_or_stat, fmt(r.value_sim), fmt(r.value_adult));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
