use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::table::{Table, VariableSchema};

/// The 15 columns of the canonical Adult files, in file order.
pub const ADULT_COLUMNS: [&str; 15] = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
    "income",
];

const NUMERIC_COLUMNS: [usize; 6] = [0, 2, 4, 10, 11, 12];
const MISSING: &str = "?";

/// Which Adult file a record came from. Test-file labels carry a trailing '.'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    /// Trimmed field text; missing markers are kept as "?".
    pub fields: Vec<String>,
    pub partition: Partition,
    /// 1-based line in the source file.
    pub line: usize,
}

impl RawRecord {
    pub fn field(&self, column: usize) -> &str {
        &self.fields[column]
    }

    pub fn has_missing(&self) -> bool {
        self.fields.iter().any(|f| f == MISSING)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub records: Vec<RawRecord>,
    /// Hex SHA-256 over the source bytes, in load order.
    pub digest: String,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Load one Adult-format file. Blank lines and `|`-prefixed comment lines are
/// skipped.
pub fn load_adult(path: impl AsRef<Path>) -> Result<RawTable> {
    load_adult_files(&[path.as_ref()])
}

/// Load and concatenate several Adult-format files (typically `adult.data`
/// followed by `adult.test`).
pub fn load_adult_files<P: AsRef<Path>>(paths: &[P]) -> Result<RawTable> {
    let mut hasher = Sha256::new();
    let mut records = Vec::new();
    for path in paths {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        hasher.update(&bytes);
        let text = String::from_utf8_lossy(&bytes);
        parse_records(&text, &mut records)?;
    }
    if records.is_empty() {
        let p = paths
            .first()
            .map(|p| p.as_ref().to_path_buf())
            .unwrap_or_default();
        return Err(Error::NoRecords(p));
    }
    Ok(RawTable {
        records,
        digest: hex::encode(hasher.finalize()),
    })
}

/// Load `adult.data` and, when present, `adult.test` from a directory.
pub fn load_adult_dir(dir: impl AsRef<Path>) -> Result<RawTable> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = vec![dir.join("adult.data")];
    let test = dir.join("adult.test");
    if test.is_file() {
        files.push(test);
    }
    load_adult_files(&files)
}

fn parse_records(text: &str, out: &mut Vec<RawRecord>) -> Result<()> {
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('|') {
            continue;
        }
        let fields: Vec<String> = trimmed.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != ADULT_COLUMNS.len() {
            return Err(Error::ColumnCount {
                line: i + 1,
                expected: ADULT_COLUMNS.len(),
                found: fields.len(),
            });
        }
        for &c in &NUMERIC_COLUMNS {
            let f = &fields[c];
            if f != MISSING && f.parse::<f64>().is_err() {
                return Err(Error::ParseNumeric {
                    line: i + 1,
                    column: ADULT_COLUMNS[c].to_string(),
                    value: f.clone(),
                });
            }
        }
        let partition = if fields[14].ends_with('.') {
            Partition::Test
        } else {
            Partition::Train
        };
        out.push(RawRecord {
            fields,
            partition,
            line: i + 1,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionFilter {
    #[default]
    Train,
    Test,
    All,
}

impl PartitionFilter {
    fn keeps(self, p: Partition) -> bool {
        match self {
            PartitionFilter::Train => p == Partition::Train,
            PartitionFilter::Test => p == Partition::Test,
            PartitionFilter::All => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    #[serde(default)]
    pub partitions: PartitionFilter,
}

/// Cleaned Adult table: 13 typed variables, no missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDataset {
    pub table: Table,
    /// Digest of the raw source the table was built from.
    pub provenance: String,
    pub raw_rows: usize,
    pub dropped_missing: usize,
}

impl BaseDataset {
    pub fn n_rows(&self) -> usize {
        self.table.n_rows()
    }

    /// Render back into Adult raw format (capital-net split into gain/loss,
    /// sample weight zeroed), tagged as training-partition rows.
    pub fn to_raw(&self) -> RawTable {
        let t = &self.table;
        let records = (0..t.n_rows())
            .map(|i| {
                let get = |name: &str| {
                    let v = t.variable(name).expect("schema");
                    v.format_value(t.column(name).expect("schema")[i])
                };
                let net = t.column("capital-net").expect("schema")[i];
                let fields = ADULT_COLUMNS
                    .iter()
                    .map(|&c| match c {
                        "fnlwgt" => "0".to_string(),
                        "capital-gain" => format!("{}", net.max(0.0)),
                        "capital-loss" => format!("{}", (-net).max(0.0)),
                        other => get(other),
                    })
                    .collect();
                RawRecord {
                    fields,
                    partition: Partition::Train,
                    line: i + 1,
                }
            })
            .collect();
        RawTable {
            records,
            digest: self.provenance.clone(),
        }
    }
}

/// Collapse the three married statuses into a single `Married` category.
fn recode_marital(s: &str) -> &str {
    match s {
        "Married-civ-spouse" | "Married-AF-spouse" | "Married-spouse-absent" => "Married",
        other => other,
    }
}

fn income_label(s: &str) -> &str {
    s.trim_end_matches('.')
}

pub fn preprocess(raw: &RawTable) -> Result<BaseDataset> {
    preprocess_with(raw, &PreprocessOptions::default())
}

/// Drop rows with any missing marker, keep the requested partitions, merge
/// capital gain/loss into capital-net, drop the sample weight and keep income
/// as the binary >50K label.
pub fn preprocess_with(raw: &RawTable, opts: &PreprocessOptions) -> Result<BaseDataset> {
    let kept: Vec<&RawRecord> = raw
        .records
        .iter()
        .filter(|r| opts.partitions.keeps(r.partition))
        .collect();
    let complete: Vec<&RawRecord> = kept.iter().copied().filter(|r| !r.has_missing()).collect();
    let dropped_missing = kept.len() - complete.len();

    let col = |name: &str| ADULT_COLUMNS.iter().position(|c| *c == name).expect("column");
    let num = |r: &RawRecord, name: &str| -> Result<f64> {
        let f = r.field(col(name));
        f.parse::<f64>().map_err(|_| Error::ParseNumeric {
            line: r.line,
            column: name.to_string(),
            value: f.to_string(),
        })
    };
    let label = |r: &RawRecord, name: &str| -> String {
        let f = r.field(col(name));
        match name {
            "marital-status" => recode_marital(f).to_string(),
            "income" => income_label(f).to_string(),
            _ => f.to_string(),
        }
    };

    // Frozen vocabularies.
    let mut vocab: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for name in CATEGORICAL {
        let set = complete.iter().map(|r| label(r, name)).collect();
        vocab.insert(name, set);
    }
    let mut edu_levels: BTreeMap<String, i64> = BTreeMap::new();
    for r in &complete {
        let lvl = num(r, "education-num")? as i64;
        let deg = label(r, "education");
        if let Some(prev) = edu_levels.insert(deg.clone(), lvl) {
            if prev != lvl {
                return Err(Error::data(format!(
                    "education {deg:?} maps to both level {prev} and {lvl}"
                )));
            }
        }
    }

    let mut schema = Vec::with_capacity(13);
    for name in SCHEMA_ORDER {
        let var = match name {
            "age" => VariableSchema::continuous(name, "years"),
            "education-num" => VariableSchema::continuous(name, "level"),
            "capital-net" => VariableSchema::continuous(name, "USD/year"),
            "hours-per-week" => VariableSchema::continuous(name, "hours/week"),
            "education" => {
                let mut cats: Vec<(i64, String)> =
                    edu_levels.iter().map(|(d, l)| (*l, d.clone())).collect();
                cats.sort();
                let mut cats: Vec<String> = cats.into_iter().map(|(_, d)| d).collect();
                if cats.len() < 2 {
                    cats = pad_vocabulary(cats, name);
                }
                VariableSchema::categorical(name, cats, "degree")?
            }
            _ => {
                let mut cats: Vec<String> = vocab[name].iter().cloned().collect();
                if cats.len() < 2 {
                    cats = pad_vocabulary(cats, name);
                }
                VariableSchema::categorical(name, cats, "")?
            }
        };
        schema.push(var);
    }

    let mut table = Table::new(schema)?;
    let mut row = vec![0.0; SCHEMA_ORDER.len()];
    for r in &complete {
        for (j, name) in SCHEMA_ORDER.iter().enumerate() {
            row[j] = match *name {
                "capital-net" => num(r, "capital-gain")? - num(r, "capital-loss")?,
                "age" | "education-num" | "hours-per-week" => num(r, name)?,
                _ => table.schema()[j].category_code(&label(r, name))?,
            };
        }
        table.push_row(&row)?;
    }

    Ok(BaseDataset {
        table,
        provenance: raw.digest.clone(),
        raw_rows: raw.len(),
        dropped_missing,
    })
}

const SCHEMA_ORDER: [&str; 13] = [
    "age",
    "workclass",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-net",
    "hours-per-week",
    "native-country",
    "income",
];

const CATEGORICAL: [&str; 8] = [
    "workclass",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "native-country",
    "income",
];

fn pad_vocabulary(mut observed: Vec<String>, name: &str) -> Vec<String> {
    for c in canonical_vocabulary(name) {
        if !observed.contains(&c) {
            observed.push(c);
        }
    }
    observed
}

/// Vocabulary from the Adult codebook, used when the cleaned data is too
/// small to freeze one.
fn canonical_vocabulary(name: &str) -> Vec<String> {
    let cats: &[&str] = match name {
        "workclass" => &[
            "Federal-gov", "Local-gov", "Never-worked", "Private", "Self-emp-inc",
            "Self-emp-not-inc", "State-gov", "Without-pay",
        ],
        "education" => &[
            "Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th",
            "HS-grad", "Some-college", "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters",
            "Prof-school", "Doctorate",
        ],
        "marital-status" => &["Divorced", "Married", "Never-married", "Separated", "Widowed"],
        "occupation" => &[
            "Adm-clerical", "Armed-Forces", "Craft-repair", "Exec-managerial",
            "Farming-fishing", "Handlers-cleaners", "Machine-op-inspct", "Other-service",
            "Priv-house-serv", "Prof-specialty", "Protective-serv", "Sales", "Tech-support",
            "Transport-moving",
        ],
        "relationship" => &[
            "Husband", "Not-in-family", "Other-relative", "Own-child", "Unmarried", "Wife",
        ],
        "race" => &["Amer-Indian-Eskimo", "Asian-Pac-Islander", "Black", "Other", "White"],
        "sex" => &["Female", "Male"],
        "income" => &["<=50K", ">50K"],
        // native-country has 41 values; two suffice to keep an empty schema valid.
        _ => &["United-States", "Other"],
    };
    cats.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const ROWS: &str = "\
39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 5000, 2000, 40, United-States, <=50K
50, Self-emp-not-inc, 83311, Bachelors, 13, Married-civ-spouse, Exec-managerial, Husband, White, Male, 0, 0, 13, United-States, <=50K
38, ?, 215646, HS-grad, 9, Divorced, ?, Not-in-family, White, Male, 0, 0, 40, United-States, <=50K
";
    const TEST_ROWS: &str = "|1x3 Cross validator
25, Private, 226802, 11th, 7, Never-married, Machine-op-inspct, Own-child, Black, Female, 0, 0, 40, United-States, >50K.

";

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_and_tags_partitions() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "adult.data", ROWS);
        let b = write(dir.path(), "adult.test", TEST_ROWS);
        let raw = load_adult_files(&[a, b]).unwrap();
        assert_eq!(raw.len(), 4);
        assert_eq!(raw.records[3].partition, Partition::Test);
        assert!(raw.records[2].has_missing());
        assert_eq!(raw.records[3].line, 2);
    }

    #[test]
    fn empty_file_is_no_records() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "adult.data", "\n\n");
        assert!(matches!(load_adult(a), Err(Error::NoRecords(_))));
    }

    #[test]
    fn fourteen_columns_is_column_count_error() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(
            dir.path(),
            "adult.data",
            "39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 0, 0, 40, <=50K\n",
        );
        match load_adult(a) {
            Err(Error::ColumnCount { line, found, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(found, 14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_numeric_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let body = ROWS.replacen("77516", "lots", 1);
        let a = write(dir.path(), "adult.data", &body);
        match load_adult(a) {
            Err(Error::ParseNumeric { line, column, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(column, "fnlwgt");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_error() {
        assert!(matches!(load_adult("/nonexistent/adult.data"), Err(Error::MissingFile(_))));
    }

    #[test]
    fn preprocess_merges_capital_and_drops_missing() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "adult.data", ROWS);
        let base = preprocess(&load_adult(a).unwrap()).unwrap();
        assert_eq!(base.n_rows(), 2);
        assert_eq!(base.dropped_missing, 1);
        assert_eq!(base.table.column("capital-net").unwrap()[0], 3000.0);
        let mar = base.table.variable("marital-status").unwrap();
        assert!(mar.category_index("Married").is_some());
        assert!(base.table.index_of("fnlwgt").is_err());
        assert_eq!(base.table.n_cols(), 13);
    }

    #[test]
    fn test_partition_labels_lose_trailing_period() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "adult.data", ROWS);
        let b = write(dir.path(), "adult.test", TEST_ROWS);
        let raw = load_adult_files(&[a, b]).unwrap();
        let opts = PreprocessOptions {
            partitions: PartitionFilter::All,
        };
        let base = preprocess_with(&raw, &opts).unwrap();
        assert_eq!(base.n_rows(), 3);
        let inc = base.table.variable("income").unwrap();
        assert_eq!(inc.categories, vec!["<=50K".to_string(), ">50K".to_string()]);
        let train_only = preprocess(&raw).unwrap();
        assert_eq!(train_only.n_rows(), 2);
    }

    #[test]
    fn zero_complete_rows_gives_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let body = ROWS.lines().nth(2).unwrap().to_string() + "\n";
        let a = write(dir.path(), "adult.data", &body);
        let base = preprocess(&load_adult(a).unwrap()).unwrap();
        assert_eq!(base.n_rows(), 0);
        assert_eq!(base.table.n_cols(), 13);
    }

    #[test]
    fn preprocess_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "adult.data", ROWS);
        let base = preprocess(&load_adult(a).unwrap()).unwrap();
        let again = preprocess(&base.to_raw()).unwrap();
        assert_eq!(again.table, base.table);
    }
}
