//! Typed column-major tables shared by ingestion, simulation and estimation.
//!
//! Categorical cells hold the category index as an `f64` (exact for any
//! realistic vocabulary size); continuous cells hold the value itself.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSchema {
    pub name: String,
    pub kind: VarKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
}

impl VariableSchema {
    pub fn categorical(
        name: impl Into<String>,
        categories: Vec<String>,
        unit: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        let distinct: HashSet<&String> = categories.iter().collect();
        if distinct.len() != categories.len() {
            return Err(Error::data(format!("duplicate categories for {name}")));
        }
        if categories.len() < 2 {
            return Err(Error::data(format!(
                "categorical variable {name} needs at least 2 categories, got {}",
                categories.len()
            )));
        }
        Ok(Self {
            name,
            kind: VarKind::Categorical,
            categories,
            unit: unit.into(),
        })
    }

    pub fn continuous(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: VarKind::Continuous,
            categories: Vec::new(),
            unit: unit.into(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == VarKind::Categorical
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }

    pub fn category_code(&self, label: &str) -> Result<f64> {
        self.category_index(label)
            .map(|i| i as f64)
            .ok_or_else(|| Error::UnseenCategory {
                variable: self.name.clone(),
                value: label.to_string(),
            })
    }

    /// Human-readable rendering of a cell value.
    pub fn format_value(&self, value: f64) -> String {
        match self.kind {
            VarKind::Categorical => self
                .categories
                .get(value as usize)
                .cloned()
                .unwrap_or_else(|| format!("<{value}>")),
            VarKind::Continuous => format!("{value}"),
        }
    }

    pub fn parse_value(&self, raw: &str) -> Result<f64> {
        match self.kind {
            VarKind::Categorical => self.category_code(raw),
            VarKind::Continuous => raw.trim().parse::<f64>().map_err(|_| Error::ParseNumeric {
                line: 0,
                column: self.name.clone(),
                value: raw.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    schema: Vec<VariableSchema>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(schema: Vec<VariableSchema>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &schema {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::data(format!("duplicate variable name {:?}", v.name)));
            }
        }
        let columns = vec![Vec::new(); schema.len()];
        Ok(Self { schema, columns })
    }

    pub fn from_columns(schema: Vec<VariableSchema>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::data("schema/column count mismatch"));
        }
        let mut t = Self::new(schema)?;
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::data("ragged columns"));
            }
        }
        t.columns = columns;
        Ok(t)
    }

    pub fn schema(&self) -> &[VariableSchema] {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn variable(&self, name: &str) -> Result<&VariableSchema> {
        Ok(&self.schema[self.index_of(name)?])
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn column_at(&self, idx: usize) -> &[f64] {
        &self.columns[idx]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::data(format!(
                "row width {} does not match schema width {}",
                row.len(),
                self.columns.len()
            )));
        }
        for (col, v) in self.columns.iter_mut().zip(row) {
            col.push(*v);
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn add_column(&mut self, schema: VariableSchema, values: Vec<f64>) -> Result<()> {
        if self.schema.iter().any(|v| v.name == schema.name) {
            return Err(Error::data(format!("duplicate variable name {:?}", schema.name)));
        }
        if !self.schema.is_empty() && values.len() != self.n_rows() {
            return Err(Error::data("column length mismatch"));
        }
        self.schema.push(schema);
        self.columns.push(values);
        Ok(())
    }

    /// New table with the named columns in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Table> {
        let mut schema = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let idx = self.index_of(name)?;
            schema.push(self.schema[idx].clone());
            columns.push(self.columns[idx].clone());
        }
        Table::from_columns(schema, columns)
    }

    pub fn take_rows(&self, rows: &[usize]) -> Table {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Table {
            schema: self.schema.clone(),
            columns,
        }
    }

    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Table {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(i)).collect();
        self.take_rows(&rows)
    }

    /// CSV with a header row; categorical cells are written as labels.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.iter().map(|v| v.name.as_str()))?;
        let mut record = Vec::with_capacity(self.n_cols());
        for i in 0..self.n_rows() {
            record.clear();
            for (v, c) in self.schema.iter().zip(&self.columns) {
                record.push(v.format_value(c[i]));
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Read a CSV produced by [`Table::write_csv`] against a known schema.
    /// Columns are matched by header name; extra CSV columns are ignored.
    pub fn read_csv<R: Read>(reader: R, schema: Vec<VariableSchema>) -> Result<Table> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let positions = schema
            .iter()
            .map(|v| {
                headers
                    .iter()
                    .position(|h| h == v.name)
                    .ok_or_else(|| Error::data(format!("CSV lacks column {:?}", v.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Table::new(schema)?;
        let mut row = vec![0.0; positions.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            for (j, &p) in positions.iter().enumerate() {
                let raw = rec.get(p).unwrap_or("");
                row[j] = table.schema[j].parse_value(raw).map_err(|e| match e {
                    Error::ParseNumeric { column, value, .. } => Error::ParseNumeric {
                        line: line + 2,
                        column,
                        value,
                    },
                    other => other,
                })?;
            }
            table.push_row(&row)?;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Table {
        let schema = vec![
            VariableSchema::categorical("sex", vec!["F".into(), "M".into()], "").unwrap(),
            VariableSchema::continuous("age", "years"),
        ];
        Table::from_columns(schema, vec![vec![0.0, 1.0, 1.0], vec![30.0, 41.5, 22.0]]).unwrap()
    }

    #[test]
    fn categorical_needs_two_categories() {
        assert!(VariableSchema::categorical("x", vec!["a".into()], "").is_err());
        assert!(VariableSchema::categorical("x", vec!["a".into(), "a".into()], "").is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let s = vec![
            VariableSchema::continuous("a", ""),
            VariableSchema::continuous("a", ""),
        ];
        assert!(Table::new(s).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = toy();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sex,age\nF,30\nM,41.5\n"));
        let back = Table::read_csv(&buf[..], t.schema().to_vec()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn select_and_filter() {
        let t = toy();
        let s = t.select(&["age"]).unwrap();
        assert_eq!(s.n_cols(), 1);
        let f = t.filter_rows(|i| t.column("sex").unwrap()[i] == 1.0);
        assert_eq!(f.column("age").unwrap(), &[41.5, 22.0]);
        assert!(t.select(&["nope"]).is_err());
    }
}
