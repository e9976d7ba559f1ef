//! CSV ingestion with a header row.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use bicog::data::{Example, LabeledPool, Split};
use bicog::Dataset;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("row {row}, column {column}: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Read(String),
}

/// Rows with dense labels in order of first appearance.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub dim: usize,
    pub label_names: Vec<String>,
    pub rows: Vec<(Example<f64>, Option<Split>)>,
}

impl CsvTable {
    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    /// All rows as one pool, ignoring any split column. Test split is empty.
    pub fn pool(&self) -> LabeledPool<f64> {
        LabeledPool {
            dim: self.dim,
            num_classes: self.num_classes(),
            train: self.rows.iter().map(|(e, _)| e.clone()).collect(),
            test: Vec::new(),
        }
    }

    /// Dataset from the split column. Base classes are those seen labeled.
    pub fn dataset_from_split_column(&self) -> Option<Dataset<f64>> {
        let (mut labeled, mut unlabeled, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for (ex, split) in &self.rows {
            match (*split)? {
                Split::Labeled => labeled.push(ex.clone()),
                Split::Unlabeled => unlabeled.push(ex.clone()),
                Split::Test => test.push(ex.clone()),
            }
        }
        let base: BTreeSet<usize> = labeled.iter().filter_map(|e| e.label).collect();
        Some(Dataset::from_splits(
            self.dim,
            self.num_classes(),
            base,
            labeled,
            unlabeled,
            test,
        ))
    }
}

fn parse_split(value: &str) -> Option<Split> {
    match value.trim() {
        "labeled" => Some(Split::Labeled),
        "unlabeled" => Some(Split::Unlabeled),
        "test" => Some(Split::Test),
        _ => None,
    }
}

/// Reads CSV text. Row numbers in errors count the header as row 1.
pub fn read_csv(
    reader: impl Read,
    feature_columns: &[String],
    label_column: &str,
    split_column: Option<&str>,
) -> Result<CsvTable, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CsvError::Read(e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CsvError::MissingColumn(name.to_string()))
    };
    let feature_idx = feature_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>, _>>()?;
    let label_idx = find(label_column)?;
    let split_idx = split_column.map(find).transpose()?;

    let mut label_names = Vec::new();
    let mut label_map: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| CsvError::Read(e.to_string()))?;
        let cell = |idx: usize, column: &str| {
            record.get(idx).ok_or_else(|| CsvError::ParseError {
                row,
                column: column.to_string(),
                message: "missing cell".into(),
            })
        };
        let mut features = Vec::with_capacity(feature_idx.len());
        for (&idx, name) in feature_idx.iter().zip(feature_columns) {
            let raw = cell(idx, name)?;
            let value: f64 = raw.trim().parse().map_err(|_| CsvError::ParseError {
                row,
                column: name.clone(),
                message: format!("not a number: {raw:?}"),
            })?;
            if !value.is_finite() {
                return Err(CsvError::ParseError {
                    row,
                    column: name.clone(),
                    message: "non-finite value".into(),
                });
            }
            features.push(value);
        }
        let name = cell(label_idx, label_column)?.trim().to_string();
        let next = label_names.len();
        let label = *label_map.entry(name.clone()).or_insert_with(|| {
            label_names.push(name);
            next
        });
        let split = match (split_idx, split_column) {
            (Some(idx), Some(col)) => {
                let raw = cell(idx, col)?;
                Some(parse_split(raw).ok_or_else(|| CsvError::ParseError {
                    row,
                    column: col.to_string(),
                    message: format!("split must be labeled, unlabeled or test, got {raw:?}"),
                })?)
            }
            _ => None,
        };
        rows.push((Example::labeled(i as u64, features, label), split));
    }
    Ok(CsvTable {
        dim: feature_columns.len(),
        label_names,
        rows,
    })
}
