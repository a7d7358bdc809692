use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Table, VarKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VariableStats {
    Categorical {
        name: String,
        /// (category, count, rate) in schema order.
        levels: Vec<(String, usize, f64)>,
    },
    Continuous {
        name: String,
        mean: f64,
        q25: f64,
        q75: f64,
    },
}

impl VariableStats {
    pub fn name(&self) -> &str {
        match self {
            VariableStats::Categorical { name, .. } | VariableStats::Continuous { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub n: usize,
    pub variables: Vec<VariableStats>,
}

impl CohortStats {
    pub fn get(&self, name: &str) -> Option<&VariableStats> {
        self.variables.iter().find(|v| v.name() == name)
    }

    /// Rate of one category, if the variable is categorical and knows it.
    pub fn rate(&self, variable: &str, category: &str) -> Option<f64> {
        match self.get(variable)? {
            VariableStats::Categorical { levels, .. } => levels
                .iter()
                .find(|(c, _, _)| c == category)
                .map(|(_, _, r)| *r),
            VariableStats::Continuous { .. } => None,
        }
    }

    pub fn count(&self, variable: &str, category: &str) -> Option<usize> {
        match self.get(variable)? {
            VariableStats::Categorical { levels, .. } => levels
                .iter()
                .find(|(c, _, _)| c == category)
                .map(|(_, n, _)| *n),
            VariableStats::Continuous { .. } => None,
        }
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Counts and rates for categorical variables; mean and interquartile range
/// for continuous ones.
pub fn cohort_stats(table: &Table) -> Result<CohortStats> {
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::data("cohort_stats on an empty dataset"));
    }
    let variables = table
        .schema()
        .iter()
        .zip(table.columns())
        .map(|(var, col)| match var.kind {
            VarKind::Categorical => {
                let mut counts = vec![0usize; var.n_categories()];
                for &v in col {
                    counts[v as usize] += 1;
                }
                let levels = var
                    .categories
                    .iter()
                    .zip(counts)
                    .map(|(c, k)| (c.clone(), k, k as f64 / n as f64))
                    .collect();
                VariableStats::Categorical {
                    name: var.name.clone(),
                    levels,
                }
            }
            VarKind::Continuous => {
                let mut sorted = col.clone();
                sorted.sort_by(f64::total_cmp);
                VariableStats::Continuous {
                    name: var.name.clone(),
                    mean: col.iter().sum::<f64>() / n as f64,
                    q25: quantile_sorted(&sorted, 0.25),
                    q75: quantile_sorted(&sorted, 0.75),
                }
            }
        })
        .collect();
    Ok(CohortStats { n, variables })
}

/// One line of a simulated-vs-reference comparison. Categorical rows carry
/// rates; a missing side (variable absent from one cohort) is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub variable: String,
    pub category_or_stat: String,
    pub value_sim: Option<f64>,
    pub value_adult: Option<f64>,
}

pub fn compare_stats(sim: &CohortStats, adult: &CohortStats) -> Vec<StatRow> {
    let mut rows = vec![StatRow {
        variable: "n".into(),
        category_or_stat: "count".into(),
        value_sim: Some(sim.n as f64),
        value_adult: Some(adult.n as f64),
    }];
    let mut names: Vec<&str> = sim.variables.iter().map(VariableStats::name).collect();
    for v in &adult.variables {
        if !names.contains(&v.name()) {
            names.push(v.name());
        }
    }
    for name in names {
        let s = sim.get(name);
        let a = adult.get(name);
        let kind = s.or(a).expect("present in one");
        match kind {
            VariableStats::Categorical { .. } => {
                let mut cats: Vec<String> = Vec::new();
                for side in [s, a].into_iter().flatten() {
                    if let VariableStats::Categorical { levels, .. } = side {
                        for (c, _, _) in levels {
                            if !cats.contains(c) {
                                cats.push(c.clone());
                            }
                        }
                    }
                }
                for c in cats {
                    rows.push(StatRow {
                        variable: name.to_string(),
                        category_or_stat: c.clone(),
                        value_sim: sim.rate(name, &c),
                        value_adult: adult.rate(name, &c),
                    });
                }
            }
            VariableStats::Continuous { .. } => {
                let pick = |side: Option<&VariableStats>, which: usize| match side {
                    Some(VariableStats::Continuous { mean, q25, q75, .. }) => {
                        Some([*mean, *q25, *q75][which])
                    }
                    _ => None,
                };
                for (i, stat) in ["mean", "q25", "q75"].iter().enumerate() {
                    rows.push(StatRow {
                        variable: name.to_string(),
                        category_or_stat: stat.to_string(),
                        value_sim: pick(s, i),
                        value_adult: pick(a, i),
                    });
                }
            }
        }
    }
    rows
}

pub fn write_comparison_csv<W: Write>(rows: &[StatRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["variable", "category_or_stat", "value_sim", "value_adult"])?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.variable.clone(),
            r.category_or_stat.clone(),
            fmt(r.value_sim),
            fmt(r.value_adult),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
