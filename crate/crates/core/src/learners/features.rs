use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Table, VarKind, VariableSchema};

/// Dense row-major design matrix with a cached list of nonzero columns per
/// row. One-hot blocks make rows very sparse, which linear learners exploit.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    n: usize,
    p: usize,
    data: Vec<f64>,
    nonzero: Vec<Vec<u32>>,
}

impl Features {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::data(format!(
                "feature buffer has {} values, expected {n} x {p}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "non-finite feature at row {}, column {}",
                bad / p.max(1),
                bad % p.max(1)
            )));
        }
        let nonzero = (0..n)
            .map(|i| {
                data[i * p..(i + 1) * p]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        Ok(Self { n, p, data, nonzero })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::data("ragged feature rows"));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn nonzero(&self, i: usize) -> &[u32] {
        &self.nonzero[i]
    }

    pub fn take_rows(&self, rows: &[usize]) -> Features {
        let mut data = Vec::with_capacity(rows.len() * self.p);
        let mut nonzero = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
            nonzero.push(self.nonzero[r].clone());
        }
        Features {
            n: rows.len(),
            p: self.p,
            data,
            nonzero,
        }
    }

    /// Append one column (used to add the treatment indicator).
    pub fn with_column(&self, values: &[f64]) -> Result<Features> {
        if values.len() != self.n {
            return Err(Error::data("column length mismatch"));
        }
        let p = self.p + 1;
        let mut data = Vec::with_capacity(self.n * p);
        for i in 0..self.n {
            data.extend_from_slice(self.row(i));
            data.push(values[i]);
        }
        Features::new(self.n, p, data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputLayout {
    OneHot { offset: usize, width: usize },
    Scaled { offset: usize, mean: f64, scale: f64 },
}

/// Maps records over a schema to numeric vectors: one-hot blocks for
/// categorical inputs, standardized scalars (training mean/std) for
/// continuous ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    schema: Vec<VariableSchema>,
    layout: Vec<InputLayout>,
    width: usize,
}

impl FeatureEncoder {
    /// Build the layout, taking standardization statistics from `table`
    /// (which must contain every schema variable by name).
    pub fn fit(schema: Vec<VariableSchema>, table: &Table) -> Result<Self> {
        let mut layout = Vec::with_capacity(schema.len());
        let mut offset = 0;
        for var in &schema {
            match var.kind {
                VarKind::Categorical => {
                    layout.push(InputLayout::OneHot {
                        offset,
                        width: var.n_categories(),
                    });
                    offset += var.n_categories();
                }
                VarKind::Continuous => {
                    let col = table.column(&var.name)?;
                    let (mean, scale) = mean_and_scale(col);
                    layout.push(InputLayout::Scaled { offset, mean, scale });
                    offset += 1;
                }
            }
        }
        Ok(Self {
            schema,
            layout,
            width: offset,
        })
    }

    /// Layout with explicit standardization statistics (mean 0, scale 1 when
    /// none are known).
    pub fn with_stats(schema: Vec<VariableSchema>, stats: &[(f64, f64)]) -> Self {
        let mut layout = Vec::with_capacity(schema.len());
        let mut offset = 0;
        let mut k = 0;
        for var in &schema {
            match var.kind {
                VarKind::Categorical => {
                    layout.push(InputLayout::OneHot {
                        offset,
                        width: var.n_categories(),
                    });
                    offset += var.n_categories();
                }
                VarKind::Continuous => {
                    let (mean, scale) = stats.get(k).copied().unwrap_or((0.0, 1.0));
                    k += 1;
                    layout.push(InputLayout::Scaled { offset, mean, scale });
                    offset += 1;
                }
            }
        }
        Self {
            schema,
            layout,
            width: offset,
        }
    }

    pub fn schema(&self) -> &[VariableSchema] {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layout(&self) -> &[InputLayout] {
        &self.layout
    }

    /// Encode cell values given in schema order (categorical values as codes).
    pub fn encode_into(&self, values: &[f64], out: &mut [f64]) -> Result<()> {
        if values.len() != self.schema.len() {
            return Err(Error::data(format!(
                "record has {} fields, encoder expects {}",
                values.len(),
                self.schema.len()
            )));
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for ((var, lay), &v) in self.schema.iter().zip(&self.layout).zip(values) {
            match *lay {
                InputLayout::OneHot { offset, width } => {
                    let code = v as usize;
                    if v < 0.0 || v.fract() != 0.0 || code >= width {
                        return Err(Error::UnseenCategory {
                            variable: var.name.clone(),
                            value: format!("{v}"),
                        });
                    }
                    out[offset + code] = 1.0;
                }
                InputLayout::Scaled { offset, mean, scale } => {
                    out[offset] = (v - mean) / scale;
                }
            }
        }
        Ok(())
    }

    pub fn encode(&self, values: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.width];
        self.encode_into(values, &mut out)?;
        Ok(out)
    }

    /// Encode a textual record (labels for categorical, numbers for continuous).
    pub fn encode_text(&self, fields: &[&str]) -> Result<Vec<f64>> {
        if fields.len() != self.schema.len() {
            return Err(Error::data("missing field in record"));
        }
        let values = self
            .schema
            .iter()
            .zip(fields)
            .map(|(v, f)| v.parse_value(f))
            .collect::<Result<Vec<_>>>()?;
        self.encode(&values)
    }

    /// Encode every row of a table, matching columns by name.
    pub fn encode_table(&self, table: &Table) -> Result<Features> {
        let cols = self
            .schema
            .iter()
            .map(|v| table.column(&v.name))
            .collect::<Result<Vec<_>>>()?;
        let n = table.n_rows();
        let mut data = vec![0.0; n * self.width];
        let mut values = vec![0.0; cols.len()];
        for i in 0..n {
            for (j, c) in cols.iter().enumerate() {
                values[j] = c[i];
            }
            self.encode_into(&values, &mut data[i * self.width..(i + 1) * self.width])?;
        }
        Features::new(n, self.width, data)
    }
}

fn mean_and_scale(col: &[f64]) -> (f64, f64) {
    if col.is_empty() {
        return (0.0, 1.0);
    }
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}
