//! Fitting, ancestral simulation and counterfactual benchmark construction.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Config, SamplerSpec, STUDIES_CATEGORIES};
use crate::error::{Error, Result};
use crate::graph::{build_graph, Layer, ScmGraph};
use crate::learners::LearnerSpec;
use crate::noise::derive_noise;
use crate::par;
use crate::samplers::{
    fit_categorical_sampler, fit_continuous_sampler, fit_income_sampler, fit_zero_inflated_sampler,
    EmpiricalSampler, Sampler, StudiesSampler,
};
use crate::table::{Table, VarKind, VariableSchema};
use crate::transitions::{build_rule, TransitionRule, EDUCATION_LEVELS};

/// Training-set quality of one fitted initial-state sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub variable: String,
    pub sampler: String,
    /// "auc", "r2" or "none"
    pub metric: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScm {
    pub graph: ScmGraph,
    pub schemas: Vec<VariableSchema>,
    pub samplers: Vec<Sampler>,
    pub rules: Vec<TransitionRule>,
    pub initial_order: Vec<usize>,
    pub transition_order: Vec<usize>,
    pub config: Config,
    pub config_digest: String,
    pub diagnostics: Vec<Diagnostic>,
}

/// Schema of a simulated variable: the Adult schema, except studies (four
/// study types) and income (continuous USD per year).
fn scm_schema(adult: &Table, name: &str) -> Result<VariableSchema> {
    match name {
        "studies" => VariableSchema::categorical(
            name,
            STUDIES_CATEGORIES.iter().map(|s| s.to_string()).collect(),
            "",
        ),
        "income" => Ok(VariableSchema::continuous(name, "USD/year")),
        _ => adult
            .variable(name)
            .cloned()
            .map_err(|_| Error::UnknownVariable(name.to_string())),
    }
}

fn fit_sampler(
    config: &Config,
    adult: &Table,
    schemas: &[VariableSchema],
    layout: &[String],
    v: usize,
) -> Result<(Sampler, Diagnostic)> {
    let var = &config.variables[v];
    let name = var.name.as_str();
    let parents: Vec<&str> = var.parents.iter().map(String::as_str).collect();
    let fitted_parent = |p: &str| adult.index_of(p).map_err(|_| {
        Error::config(format!("{name}: parent {p} is not an Adult column, so the sampler cannot be fit"))
    });
    if !matches!(var.sampler, SamplerSpec::StudiesSampler(_) | SamplerSpec::IncomeSampler(_)) {
        for p in &parents {
            fitted_parent(p)?;
        }
    }
    let (sampler, metric, value) = match &var.sampler {
        SamplerSpec::LogisticSampler { multi_class, c } => {
            if let Some(m) = multi_class {
                if m != "multinomial" && m != "auto" {
                    return Err(Error::config(format!("{name}: unsupported multi_class {m:?}")));
                }
            }
            let spec = LearnerSpec::Logistic { c: *c, max_iter: 1000 };
            let s = fit_categorical_sampler(adult, name, &parents, &spec)?;
            let auc = s.auc;
            (Sampler::Categorical(s), "auc", Some(auc))
        }
        SamplerSpec::ClassifierSampler { learner } => {
            let s = fit_categorical_sampler(adult, name, &parents, learner)?;
            let auc = s.auc;
            (Sampler::Categorical(s), "auc", Some(auc))
        }
        SamplerSpec::RegressionSampler {
            learner,
            noise_coef,
            bounds,
        } => {
            let mut s = fit_continuous_sampler(adult, name, &parents, learner, *noise_coef)?;
            s.bounds = *bounds;
            let r2 = s.r2;
            (Sampler::Continuous(s), "r2", Some(r2))
        }
        SamplerSpec::ZeroInflatedSampler {
            gate,
            magnitude,
            noise_coef,
        } => {
            let s = fit_zero_inflated_sampler(adult, name, &parents, gate, magnitude, *noise_coef)?;
            let auc = s.gate_auc;
            (Sampler::ZeroInflated(s), "auc", Some(auc))
        }
        SamplerSpec::EmpiricalSampler => {
            if !parents.is_empty() {
                return Err(Error::config(format!("{name}: EmpiricalSampler takes no parents")));
            }
            let s = EmpiricalSampler::fit(adult.column(name)?)?;
            (Sampler::Empirical(s), "none", None)
        }
        SamplerSpec::StudiesSampler(coef) => {
            let ps = parents
                .iter()
                .map(|p| layout.iter().position(|l| l == p).map(|i| schemas[i].clone()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::config(format!("{name}: unknown parent")))?;
            (Sampler::Studies(StudiesSampler::new(coef, &ps)?), "none", None)
        }
        SamplerSpec::IncomeSampler(spec) => {
            for p in parents.iter().filter(|p| **p != "studies") {
                fitted_parent(p)?;
            }
            let s = fit_income_sampler(adult, "income", &parents, spec)?;
            let auc = s.auc;
            (Sampler::Income(s), "auc", Some(auc))
        }
    };
    let diag = Diagnostic {
        variable: name.to_string(),
        sampler: sampler_name(&var.sampler).to_string(),
        metric: metric.to_string(),
        value,
    };
    Ok((sampler, diag))
}

fn sampler_name(spec: &SamplerSpec) -> &'static str {
    match spec {
        SamplerSpec::LogisticSampler { .. } => "LogisticSampler",
        SamplerSpec::ClassifierSampler { .. } => "ClassifierSampler",
        SamplerSpec::RegressionSampler { .. } => "RegressionSampler",
        SamplerSpec::ZeroInflatedSampler { .. } => "ZeroInflatedSampler",
        SamplerSpec::EmpiricalSampler => "EmpiricalSampler",
        SamplerSpec::StudiesSampler(_) => "StudiesSampler",
        SamplerSpec::IncomeSampler(_) => "IncomeSampler",
    }
}

/// Fit every initial-state sampler on `adult` and instantiate the transitions.
pub fn fit_scm(config: &Config, adult: &Table) -> Result<FittedScm> {
    if adult.is_empty() {
        return Err(Error::data("cannot fit on an empty table"));
    }
    let graph = build_graph(&config.edge_spec())?;
    let layout: Vec<String> = graph.variables().to_vec();
    for name in [&config.simulation.treatment, &config.simulation.outcome] {
        graph.index_of(name)?;
    }
    let schemas = layout
        .iter()
        .map(|n| scm_schema(adult, n))
        .collect::<Result<Vec<_>>>()?;
    let fitted = par::try_map_range(layout.len(), |v| fit_sampler(config, adult, &schemas, &layout, v))?;
    let mut samplers = Vec::with_capacity(fitted.len());
    let mut diagnostics = Vec::with_capacity(fitted.len());
    for (v, (mut s, d)) in fitted.into_iter().enumerate() {
        s.bind(&layout)?;
        let mut declared = config.variables[v].parents.clone();
        let mut used = s.parent_names();
        declared.sort();
        used.sort();
        if declared != used && !matches!(s, Sampler::Empirical(_)) {
            return Err(Error::config(format!(
                "{}: sampler reads {used:?} but the graph declares {declared:?}",
                layout[v]
            )));
        }
        samplers.push(s);
        diagnostics.push(d);
    }
    let rules = config
        .variables
        .iter()
        .zip(&samplers)
        .map(|(var, s)| build_rule(var, &config.transitions, &layout, &schemas, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedScm {
        initial_order: graph.topological_order(Layer::Initial),
        transition_order: graph.topological_order(Layer::Transition),
        graph,
        schemas,
        samplers,
        rules,
        config_digest: config.digest(),
        config: config.clone(),
        diagnostics,
    })
}

/// Load, clean and fit in one step, reading Adult from the config's data dir
/// (or `data_dir` if given).
pub fn fit_from_config(config: &Config, data_dir: Option<&Path>) -> Result<FittedScm> {
    fit_scm(config, &load_base_dataset(config, data_dir)?.table)
}

/// Load and clean Adult from the config's data dir (or `data_dir` if given).
pub fn load_base_dataset(config: &Config, data_dir: Option<&Path>) -> Result<crate::data::BaseDataset> {
    let dir = data_dir.map(Path::to_path_buf).unwrap_or_else(|| config.data.dir.clone().into());
    let raw = crate::data::load_adult_dir(&dir)?;
    crate::data::preprocess_with(
        &raw,
        &crate::data::PreprocessOptions {
            partitions: config.data.partitions,
        },
    )
}

impl FittedScm {
    pub fn variables(&self) -> &[String] {
        self.graph.variables()
    }

    pub fn slot(&self, name: &str) -> Result<usize> {
        self.graph.index_of(name)
    }

    /// sha256 over the serialized model.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }

    /// Atomic intervention setting `variable` at time `t` to the category
    /// `label` (or a number, for continuous variables).
    pub fn atomic(&self, variable: &str, t: usize, label: &str) -> Result<Policy> {
        let v = self.slot(variable)?;
        let value = self.schemas[v].parse_value(label)?;
        Ok(Policy::Atomic {
            variable: variable.to_string(),
            t,
            value,
        })
    }

    /// One subject's trajectory, `horizon` rows of `n_vars` cells.
    fn simulate_subject(&self, subject: usize, horizon: usize, target: Option<(usize, usize, f64)>, seed: u64) -> Result<Vec<f64>> {
        let nv = self.samplers.len();
        let mut out = vec![0.0; horizon * nv];
        for t in 1..=horizon {
            let (before, rest) = out.split_at_mut((t - 1) * nv);
            let curr = &mut rest[..nv];
            let prev = if t > 1 { &before[(t - 2) * nv..] } else { &before[..0] };
            let order = if t == 1 { &self.initial_order } else { &self.transition_order };
            for &v in order {
                if let Some((tv, tt, value)) = target {
                    if tv == v && tt == t {
                        curr[v] = value;
                        continue;
                    }
                }
                let mut noise = derive_noise(seed, subject as u64, v as u32, t as u32);
                curr[v] = if t == 1 {
                    self.samplers[v].sample(curr, &mut noise)?
                } else {
                    self.rules[v].step(&self.samplers[v], prev, curr, &mut noise)?
                };
            }
        }
        Ok(out)
    }

    /// Simulate `n` independent subjects for `horizon` steps.
    pub fn simulate_panel(&self, n: usize, horizon: usize, policy: &Policy, seed: u64) -> Result<Panel> {
        if n == 0 || horizon == 0 {
            return Err(Error::config("simulation needs n >= 1 and horizon >= 1"));
        }
        let target = match policy {
            Policy::Observational => None,
            Policy::Atomic { variable, t, value } => {
                if *t < 1 || *t > horizon {
                    return Err(Error::config(format!("intervention time {t} outside 1..={horizon}")));
                }
                let v = self.slot(variable)?;
                let s = &self.schemas[v];
                if s.kind == VarKind::Categorical && (*value < 0.0 || *value as usize >= s.n_categories() || value.fract() != 0.0) {
                    return Err(Error::config(format!("{value} is not a category code of {variable}")));
                }
                Some((v, *t, *value))
            }
        };
        let rows = par::try_map_range(n, |i| self.simulate_subject(i, horizon, target, seed))?;
        Ok(Panel {
            n,
            horizon,
            variables: self.variables().to_vec(),
            schemas: self.schemas.clone(),
            seed,
            policy: policy.clone(),
            config_digest: self.config_digest.clone(),
            data: rows.concat(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Observational,
    /// Overwrite `variable` at time `t` (1-based) with `value`.
    Atomic { variable: String, t: usize, value: f64 },
}

impl Policy {
    pub fn describe(&self) -> String {
        match self {
            Policy::Observational => "observational".into(),
            Policy::Atomic { variable, t, value } => format!("do({variable}_{t}={value})"),
        }
    }
}

/// Subjects x time x variables, stored subject-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub n: usize,
    pub horizon: usize,
    pub variables: Vec<String>,
    pub schemas: Vec<VariableSchema>,
    pub seed: u64,
    pub policy: Policy,
    pub config_digest: String,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct PanelMeta<'a> {
    n: usize,
    horizon: usize,
    seed: u64,
    policy: &'a Policy,
    config_digest: &'a str,
    data_digest: String,
}

impl Panel {
    fn nv(&self) -> usize {
        self.variables.len()
    }

    /// Value of variable slot `v` at time `t` (1-based) for `subject`.
    pub fn get(&self, subject: usize, t: usize, v: usize) -> f64 {
        self.data[(subject * self.horizon + t - 1) * self.nv() + v]
    }

    pub fn row(&self, subject: usize, t: usize) -> &[f64] {
        let start = (subject * self.horizon + t - 1) * self.nv();
        &self.data[start..start + self.nv()]
    }

    pub fn slot(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn column_at(&self, t: usize, v: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, t, v)).collect()
    }

    /// All variables at time `t` as a table.
    pub fn slice(&self, t: usize) -> Result<Table> {
        if t < 1 || t > self.horizon {
            return Err(Error::config(format!("time {t} outside 1..={}", self.horizon)));
        }
        let cols = (0..self.nv()).map(|v| self.column_at(t, v)).collect();
        Table::from_columns(self.schemas.clone(), cols)
    }

    /// sha256 over the raw cell bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for x in &self.data {
            h.update(x.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Long CSV: one row per (subject, t), categories written as labels.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject".to_string(), "t".to_string()];
        header.extend(self.variables.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n {
            for t in 1..=self.horizon {
                let mut rec = vec![i.to_string(), t.to_string()];
                rec.extend(self.row(i, t).iter().zip(&self.schemas).map(|(x, s)| s.format_value(*x)));
                w.write_record(&rec)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Write `<stem>.csv` and `<stem>.meta.json` into `dir`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let meta = PanelMeta {
            n: self.n,
            horizon: self.horizon,
            seed: self.seed,
            policy: &self.policy,
            config_digest: &self.config_digest,
            data_digest: self.digest(),
        };
        write_json(&dir.join(format!("{stem}.meta.json")), &meta)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// One row per kept subject: covariates at t0, last year's income and study
/// type, binary treatment and the outcome at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    /// Covariates: t0 variables except treatment and outcome, then
    /// income_prev and studies_prev.
    pub covariates: Table,
    pub a: Vec<f64>,
    pub y: Vec<f64>,
    /// Education level (1..16) at t0, used to stratify.
    pub education_num: Vec<f64>,
    /// Panel subject index of each row.
    pub subjects: Vec<usize>,
    /// Subjects dropped for a study type other than the two arms.
    pub dropped: usize,
}

impl CrossSection {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Covariates plus A and Y as one table.
    pub fn to_table(&self) -> Result<Table> {
        let mut t = self.covariates.clone();
        t.add_column(VariableSchema::continuous("A", ""), self.a.clone())?;
        t.add_column(VariableSchema::continuous("Y", "USD/year"), self.y.clone())?;
        Ok(t)
    }

    pub fn export(&self, dir: &Path, stem: &str, meta: &impl Serialize) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{stem}.csv"));
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.to_table()?.write_csv(std::io::BufWriter::new(f))?;
        write_json(&dir.join(format!("{stem}.meta.json")), meta)
    }
}

/// Which cross-section rows to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmFilter {
    /// Only subjects in the treated or control study type at t0; A is coded 1/0.
    BinaryOnly,
    /// Every subject; A is 1 for the treated study type and 0 otherwise.
    All,
}

/// Read the estimation table off a panel.
pub fn extract_cross_section(
    panel: &Panel,
    t0: usize,
    horizon: usize,
    treatment: &str,
    outcome: &str,
    treated: f64,
    control: f64,
    filter: ArmFilter,
) -> Result<CrossSection> {
    if t0 < 2 || t0 >= horizon {
        return Err(Error::config(format!("need 2 <= t0 < horizon, got t0 {t0}, horizon {horizon}")));
    }
    if panel.horizon < horizon {
        return Err(Error::config(format!("panel horizon {} is shorter than {horizon}", panel.horizon)));
    }
    let a_slot = panel.slot(treatment)?;
    let y_slot = panel.slot(outcome)?;
    let keep: Vec<usize> = (0..panel.n)
        .filter(|&i| {
            let a = panel.get(i, t0, a_slot);
            filter == ArmFilter::All || a == treated || a == control
        })
        .collect();
    let mut schemas = Vec::new();
    let mut cols = Vec::new();
    for (v, s) in panel.schemas.iter().enumerate() {
        if v == a_slot || v == y_slot {
            continue;
        }
        schemas.push(s.clone());
        cols.push(keep.iter().map(|&i| panel.get(i, t0, v)).collect());
    }
    let mut prev_y = panel.schemas[y_slot].clone();
    prev_y.name = format!("{outcome}_prev");
    schemas.push(prev_y);
    cols.push(keep.iter().map(|&i| panel.get(i, t0 - 1, y_slot)).collect());
    let mut prev_a = panel.schemas[a_slot].clone();
    prev_a.name = format!("{treatment}_prev");
    schemas.push(prev_a);
    cols.push(keep.iter().map(|&i| panel.get(i, t0 - 1, a_slot)).collect());
    let covariates = Table::from_columns(schemas, cols)?;

    let education_num = match panel.slot("education") {
        Ok(e) => {
            let cats = &panel.schemas[e].categories;
            keep.iter()
                .map(|&i| {
                    let code = panel.get(i, t0, e) as usize;
                    let level = cats
                        .get(code)
                        .and_then(|c| EDUCATION_LEVELS.iter().position(|l| l == c))
                        .unwrap_or(code);
                    (level + 1) as f64
                })
                .collect()
        }
        Err(_) => vec![0.0; keep.len()],
    };
    Ok(CrossSection {
        covariates,
        a: keep.iter().map(|&i| f64::from(panel.get(i, t0, a_slot) == treated)).collect(),
        y: keep.iter().map(|&i| panel.get(i, horizon, y_slot)).collect(),
        education_num,
        dropped: panel.n - keep.len(),
        subjects: keep,
    })
}

/// Observational estimation data plus coupled counterfactual arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CateBenchmark {
    pub observational: CrossSection,
    /// Counterfactual cohort covariates (t0 values, identical in both arms).
    pub cohort: CrossSection,
    pub y1: Vec<f64>,
    pub y0: Vec<f64>,
    /// Per-subject Y(1) - Y(0).
    pub effects: Vec<f64>,
    pub ate: f64,
    pub seed_obs: u64,
    pub seed_cf: u64,
    pub config_digest: String,
    #[serde(skip)]
    pub panels: Option<BenchmarkPanels>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPanels {
    pub observational: Panel,
    pub treated: Panel,
    pub control: Panel,
}

pub struct BenchmarkOptions {
    pub n_obs: usize,
    pub n_cf: usize,
    pub seed_obs: u64,
    pub seed_cf: u64,
    pub keep_panels: bool,
}

impl BenchmarkOptions {
    pub fn from_config(config: &Config) -> Self {
        let s = &config.simulation;
        Self {
            n_obs: s.n_obs,
            n_cf: s.n_cf,
            seed_obs: s.seed_obs,
            seed_cf: s.seed_cf,
            keep_panels: false,
        }
    }
}

pub fn build_cate_benchmark(scm: &FittedScm, opts: &BenchmarkOptions) -> Result<CateBenchmark> {
    if opts.seed_obs == opts.seed_cf {
        return Err(Error::config(format!(
            "observational and counterfactual seeds must differ (both {})",
            opts.seed_obs
        )));
    }
    let sim = &scm.config.simulation;
    let a_slot = scm.slot(&sim.treatment)?;
    let schema = &scm.schemas[a_slot];
    let treated = schema.category_code(&sim.treated_value)?;
    let control = schema.category_code(&sim.control_value)?;
    let (h, t0) = (sim.horizon, sim.t0);

    let obs = scm.simulate_panel(opts.n_obs, h, &Policy::Observational, opts.seed_obs)?;
    let do1 = Policy::Atomic {
        variable: sim.treatment.clone(),
        t: t0,
        value: treated,
    };
    let do0 = Policy::Atomic {
        variable: sim.treatment.clone(),
        t: t0,
        value: control,
    };
    let arm1 = scm.simulate_panel(opts.n_cf, h, &do1, opts.seed_cf)?;
    let arm0 = scm.simulate_panel(opts.n_cf, h, &do0, opts.seed_cf)?;

    let observational = extract_cross_section(&obs, t0, h, &sim.treatment, &sim.outcome, treated, control, ArmFilter::BinaryOnly)?;
    let cohort = extract_cross_section(&arm1, t0, h, &sim.treatment, &sim.outcome, treated, control, ArmFilter::All)?;
    let y_slot = scm.slot(&sim.outcome)?;
    let y1 = arm1.column_at(h, y_slot);
    let y0 = arm0.column_at(h, y_slot);
    let effects: Vec<f64> = y1.iter().zip(&y0).map(|(a, b)| a - b).collect();
    let ate = effects.iter().sum::<f64>() / effects.len() as f64;
    Ok(CateBenchmark {
        observational,
        cohort,
        y1,
        y0,
        effects,
        ate,
        seed_obs: opts.seed_obs,
        seed_cf: opts.seed_cf,
        config_digest: scm.config_digest.clone(),
        panels: opts.keep_panels.then_some(BenchmarkPanels {
            observational: obs,
            treated: arm1,
            control: arm0,
        }),
    })
}

/// Share of subjects at t0 per study type, handy for sanity checks.
pub fn treatment_rates(panel: &Panel, t: usize, treatment: &str) -> Result<Vec<f64>> {
    let v = panel.slot(treatment)?;
    let k = panel.schemas[v].n_categories().max(1);
    let mut counts = vec![0usize; k];
    for i in 0..panel.n {
        counts[panel.get(i, t, v) as usize] += 1;
    }
    Ok(counts.iter().map(|c| *c as f64 / panel.n as f64).collect())
}
