//! Dataset ingestion and the preprocessing steps of the benchmark protocol:
//! subsampling, standardization and train/test splitting.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::{seeded_rng, Error, Result};

const SUBSAMPLE_STREAM: u64 = 0x5b5a;
const SPLIT_STREAM: u64 = 0x5b11;

/// How labels are validated on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Labels must be exactly -1 or +1.
    Binary,
    /// Any finite real label.
    Real,
}

/// Feature matrix (one row per object) with one real label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    name: String,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>, name: impl Into<String>) -> Result<Self> {
        let (n, d) = features.shape();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidDataset("need at least 1 feature column".into()));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!("{n} feature rows but {} labels", labels.len())));
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entry".into()));
        }
        Ok(Self { features, labels, name: name.into() })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Same features, new labels.
    pub fn with_labels(&self, labels: DVector<f64>) -> Result<Self> {
        Self::new(self.features.clone(), labels, self.name.clone())
    }

    /// Rows `idx` as a new dataset.
    pub fn rows(&self, idx: &[usize]) -> Result<Self> {
        let features = crate::linalg::select_rows(&self.features, idx);
        let labels = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.labels[i]));
        Self::new(features, labels, self.name.clone())
    }

    /// Checks the agnostic-setting invariant: every label is -1 or +1.
    pub fn check_binary(&self) -> Result<()> {
        match self.labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            Some(row) => Err(Error::NonBinaryLabel { row: row + 1, value: self.labels[row] }),
            None => Ok(()),
        }
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y > 0.0).count()
    }
}

/// Train/test partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Reads a comma separated file with one header row. Every column except
/// `label_column` becomes a feature, in header order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, mode: LabelMode) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_owned()))?;

    let d = headers.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: headers[c].clone(),
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, column: headers[c].clone(), message: "non-finite value".into() });
            }
            if c == label_idx {
                if mode == LabelMode::Binary && v != 1.0 && v != -1.0 {
                    return Err(Error::NonBinaryLabel { row, value: v });
                }
                labels.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidDataset(format!("{}: need at least 2 data rows, got {n}", path.display())));
    }
    if d == 0 {
        return Err(Error::InvalidDataset(format!("{}: no feature columns", path.display())));
    }
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_owned();
    Dataset::new(DMatrix::from_row_slice(n, d, &values), DVector::from_vec(labels), name)
}

/// Zero mean, unit population standard deviation per column. Constant
/// columns become all zeros.
pub fn standardize(d: &Dataset) -> Dataset {
    let mut x = d.features.clone();
    let n = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd <= f64::EPSILON * mean.abs().max(1.0) {
            col.fill(0.0);
        } else {
            col.apply(|v| *v = (*v - mean) / sd);
        }
    }
    Dataset { features: x, labels: d.labels.clone(), name: d.name.clone() }
}

/// Uniform subsample without replacement down to `max_n` rows; original row
/// order is kept. Datasets with at most `max_n` rows are returned unchanged.
pub fn subsample(d: &Dataset, max_n: usize, seed: u64) -> Result<Dataset> {
    if max_n < 2 {
        return Err(Error::Config(format!("max_n must be at least 2, got {max_n}")));
    }
    if d.n() <= max_n {
        return Ok(d.clone());
    }
    let mut rng = seeded_rng(seed, SUBSAMPLE_STREAM);
    let mut idx = rand::seq::index::sample(&mut rng, d.n(), max_n).into_vec();
    idx.sort_unstable();
    d.rows(&idx)
}

/// Random train/test partition of `0..n` with `round(train_frac * n)` train
/// indices. Both index lists are returned in ascending order.
pub fn split(n: usize, train_frac: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!("train_frac must lie in (0, 1), got {train_frac}")));
    }
    if n < 3 {
        return Err(Error::InvalidDataset(format!("need at least 3 rows to split, got {n}")));
    }
    let n_train = (train_frac * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!("train_frac {train_frac} leaves an empty side for n = {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed, SPLIT_STREAM));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}
