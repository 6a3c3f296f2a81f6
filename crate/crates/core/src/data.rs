//! Labeled marker matrices, CSV ingestion, standardization and stratified
//! fold assignment.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label value for diseased subjects.
pub const DISEASED: i8 = 1;
/// Label value for non-diseased subjects.
pub const NON_DISEASED: i8 = -1;

/// An immutable labeled marker matrix.
///
/// Labels are `+1` (diseased) or `-1` (non-diseased); both classes are
/// always present and every marker value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    labels: Vec<i8>,
    markers: Array2<f64>,
    marker_names: Vec<String>,
}

impl Dataset {
    pub fn new(labels: Vec<i8>, markers: Array2<f64>, marker_names: Vec<String>) -> Result<Self> {
        if markers.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: markers.nrows(),
            });
        }
        if marker_names.len() != markers.ncols() {
            return Err(Error::DimensionMismatch {
                expected: markers.ncols(),
                found: marker_names.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l != DISEASED && l != NON_DISEASED) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} is not -1 or +1"
            )));
        }
        let mut seen = HashSet::with_capacity(marker_names.len());
        for name in &marker_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateMarkerName(name.clone()));
            }
        }
        for ((row, col), v) in markers.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row: row + 1,
                    col: col + 1,
                });
            }
        }
        let diseased = labels.iter().filter(|&&l| l == DISEASED).count();
        let non_diseased = labels.len() - diseased;
        if diseased == 0 || non_diseased == 0 {
            return Err(Error::SingleClass {
                diseased,
                non_diseased,
            });
        }
        Ok(Dataset {
            labels,
            markers,
            marker_names,
        })
    }

    /// Builds a dataset with generated names `X1..Xp`.
    pub fn with_default_names(labels: Vec<i8>, markers: Array2<f64>) -> Result<Self> {
        let names = (1..=markers.ncols()).map(|j| format!("X{j}")).collect();
        Self::new(labels, markers, names)
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn markers(&self) -> &Array2<f64> {
        &self.markers
    }

    pub fn marker_names(&self) -> &[String] {
        &self.marker_names
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_markers(&self) -> usize {
        self.markers.ncols()
    }

    /// `J`, the number of diseased subjects.
    pub fn n_diseased(&self) -> usize {
        self.labels.iter().filter(|&&l| l == DISEASED).count()
    }

    /// `K`, the number of non-diseased subjects.
    pub fn n_non_diseased(&self) -> usize {
        self.labels.len() - self.n_diseased()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.markers.column(j)
    }

    /// Rows `indices` (in the given order) as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let markers = self.markers.select(Axis(0), indices);
        Dataset::new(labels, markers, self.marker_names.clone())
    }

    /// Same rows with different labels.
    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Dataset> {
        Dataset::new(labels, self.markers.clone(), self.marker_names.clone())
    }

    /// Same labels with a replaced marker matrix of the same shape.
    pub(crate) fn with_markers(&self, markers: Array2<f64>) -> Dataset {
        debug_assert_eq!(markers.dim(), self.markers.dim());
        Dataset {
            labels: self.labels.clone(),
            markers,
            marker_names: self.marker_names.clone(),
        }
    }

    /// Reorders columns to match `names`. Extra columns are dropped.
    pub fn align_columns(&self, names: &[String]) -> Result<Dataset> {
        if names == self.marker_names.as_slice() {
            return Ok(self.clone());
        }
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            match self.marker_names.iter().position(|n| n == name) {
                Some(j) => idx.push(j),
                None => {
                    return Err(Error::ColumnMismatch(format!(
                        "marker `{name}` absent from data"
                    )))
                }
            }
        }
        let markers = self.markers.select(Axis(1), &idx);
        Dataset::new(self.labels.clone(), markers, names.to_vec())
    }
}

/// Reads a CSV file with a header row. The column named `label_column`
/// supplies labels: cells equal to `positive_label` become diseased (`+1`),
/// every other token non-diseased (`-1`). All remaining columns are markers.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_label: &str,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label_column, positive_label)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, label_column: &str, positive_label: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;

    let marker_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    let names: Vec<String> = marker_cols
        .iter()
        .map(|&c| headers[c].trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    for name in &names {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateMarkerName(name.clone()));
        }
    }

    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let label = record.get(label_idx).map(str::trim).unwrap_or("");
        if label.is_empty() {
            return Err(Error::MissingValue {
                row,
                col: label_idx + 1,
            });
        }
        labels.push(if label == positive_label {
            DISEASED
        } else {
            NON_DISEASED
        });
        for &c in &marker_cols {
            let cell = record.get(c).map(str::trim).unwrap_or("");
            values.push(parse_cell(cell, row, c + 1)?);
        }
    }

    let n = labels.len();
    let markers = Array2::from_shape_vec((n, marker_cols.len()), values)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Dataset::new(labels, markers, names)
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
        return Err(Error::MissingValue { row, col });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric { row, col }),
    }
}

/// Per-column centering and scaling recorded by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations; 1 for zero-variance columns.
    pub scales: Vec<f64>,
    pub enabled: bool,
    /// Columns with zero variance. They are left untouched and their
    /// coefficients are pinned to zero during fitting.
    pub zero_variance: Vec<usize>,
}

impl Standardization {
    /// The do-nothing transform for `p` columns.
    pub fn identity(p: usize) -> Self {
        Standardization {
            means: vec![0.0; p],
            scales: vec![1.0; p],
            enabled: false,
            zero_variance: Vec::new(),
        }
    }

    /// Computes column statistics without transforming anything.
    pub fn fit(markers: &Array2<f64>) -> Self {
        let n = markers.nrows() as f64;
        let p = markers.ncols();
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        let mut zero_variance = Vec::new();
        for (j, col) in markers.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / n;
            let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd <= 1e-10 * mean.abs().max(1.0) {
                zero_variance.push(j);
                means.push(0.0);
                scales.push(1.0);
            } else {
                means.push(mean);
                scales.push(sd);
            }
        }
        Standardization {
            means,
            scales,
            enabled: true,
            zero_variance,
        }
    }

    pub fn is_zero_variance(&self, j: usize) -> bool {
        self.zero_variance.binary_search(&j).is_ok()
    }

    pub fn apply(&self, markers: &Array2<f64>) -> Array2<f64> {
        let mut out = markers.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|x| (x - m) / s);
        }
        out
    }

    /// Maps an intercept and coefficients fitted on standardized columns back
    /// to the raw column scale.
    pub fn destandardize(&self, intercept: f64, coefficients: &Array1<f64>) -> (f64, Array1<f64>) {
        let mut raw = coefficients.clone();
        let mut b0 = intercept;
        for j in 0..raw.len() {
            raw[j] = coefficients[j] / self.scales[j];
            b0 -= raw[j] * self.means[j];
        }
        (b0, raw)
    }
}

/// Centers every column to mean 0 and scales it to population SD 1.
pub fn standardize(data: &Dataset) -> (Dataset, Standardization) {
    let st = Standardization::fit(data.markers());
    (data.with_markers(st.apply(data.markers())), st)
}

/// Assignment of every sample to one of `k` folds, stratified by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Randomly partitions samples into `k` folds so that each fold holds
/// `floor` or `ceil` of `J/k` diseased and of `K/k` non-diseased subjects.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    stratified_folds_for_labels(data.labels(), k, seed)
}

pub(crate) fn stratified_folds_for_labels(
    labels: &[i8],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    let mut pos: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == DISEASED)
        .collect();
    let mut neg: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] != DISEASED)
        .collect();
    let smallest = pos.len().min(neg.len());
    if smallest < k {
        return Err(Error::TooFewPerClass {
            needed: k,
            found: smallest,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut fold_of = vec![0; labels.len()];
    // Continue the round-robin across classes so total fold sizes also
    // differ by at most one.
    let mut slot = 0;
    for &i in pos.iter().chain(neg.iter()) {
        fold_of[i] = slot % k;
        slot += 1;
    }
    Ok(FoldAssignment { fold_of, k, seed })
}
