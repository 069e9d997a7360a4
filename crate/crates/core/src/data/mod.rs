//! Tabular datasets with biased and (optionally) unbiased labels, raw
//! sensitive attributes, and the three sensitive-feature encodings.

mod csv_io;
mod encoding;
mod split;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, load_csv_reader, write_csv, ColumnRole, ColumnSpec, Schema, ValueKind};
pub use encoding::{encode_sensitive, SensitiveEncoding, SensitiveFormat};
pub use split::{split, SplitFractions};
pub use synthetic::{generate_dual_label, DualLabelConfig};

/// Dense row-major matrix of reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0×0 matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Shape {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// How a model input column was derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    /// Standardized numeric column; `mean`/`std` map stored values back to raw units.
    Numeric { mean: f64, std: f64 },
    /// One-hot indicator of a categorical feature value.
    Category { source: String, category: String },
    /// One-hot indicator of a sensitive attribute category, present when the
    /// sensitive features are included in the model input.
    Sensitive { attribute: usize, category: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    /// Numeric attribute binarized at its mean.
    Numeric,
}

/// One sensitive attribute: its domain and per-sample category codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitiveAttribute {
    pub name: String,
    pub kind: AttributeKind,
    pub categories: Vec<String>,
    pub codes: Vec<usize>,
}

impl SensitiveAttribute {
    pub fn domain_size(&self) -> usize {
        self.categories.len()
    }

    /// Sorted category codes that actually occur.
    pub fn observed(&self) -> Vec<usize> {
        let mut seen = vec![false; self.categories.len()];
        for &c in &self.codes {
            seen[c] = true;
        }
        (0..seen.len()).filter(|&c| seen[c]).collect()
    }
}

/// Features X, biased labels Y, optional unbiased labels, sensitive
/// attributes S and sample weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    features: Matrix,
    columns: Vec<FeatureColumn>,
    labels: Vec<u8>,
    unbiased_labels: Option<Vec<u8>>,
    sensitive: Vec<SensitiveAttribute>,
    weights: Vec<f64>,
}

impl TabularDataset {
    pub fn new(
        features: Matrix,
        columns: Vec<FeatureColumn>,
        labels: Vec<u8>,
        unbiased_labels: Option<Vec<u8>>,
        sensitive: Vec<SensitiveAttribute>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = labels.len();
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        let ds = TabularDataset {
            features,
            columns,
            labels,
            unbiased_labels,
            sensitive,
            weights,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let bad = |msg: String| Err(Error::InvalidDataset(msg));
        if n == 0 {
            return Err(Error::EmptyData("dataset has no rows".into()));
        }
        if self.features.rows() != n {
            return bad(format!("feature rows {} != labels {}", self.features.rows(), n));
        }
        if self.features.cols() != self.columns.len() {
            return bad(format!(
                "feature columns {} != column metadata {}",
                self.features.cols(),
                self.columns.len()
            ));
        }
        if self.weights.len() != n {
            return bad(format!("weights length {} != {}", self.weights.len(), n));
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return bad(format!("weight {w} is not strictly positive and finite"));
        }
        if self.labels.iter().any(|&y| y > 1) {
            return bad("labels must be 0 or 1".into());
        }
        if let Some(u) = &self.unbiased_labels {
            if u.len() != n {
                return bad(format!("unbiased labels length {} != {}", u.len(), n));
            }
            if u.iter().any(|&y| y > 1) {
                return bad("unbiased labels must be 0 or 1".into());
            }
        }
        for attr in &self.sensitive {
            if attr.codes.len() != n {
                return bad(format!("sensitive `{}` length {} != {}", attr.name, attr.codes.len(), n));
            }
            if let Some(c) = attr.codes.iter().find(|&&c| c >= attr.categories.len()) {
                return bad(format!(
                    "sensitive `{}` code {c} outside domain of size {}",
                    attr.name,
                    attr.categories.len()
                ));
            }
        }
        if self.features.as_slice().iter().any(|v| !v.is_finite()) {
            return bad("features must be finite".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn unbiased_labels(&self) -> Option<&[u8]> {
        self.unbiased_labels.as_deref()
    }

    pub fn sensitive(&self) -> &[SensitiveAttribute] {
        &self.sensitive
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn attribute_domains(&self) -> Vec<usize> {
        self.sensitive.iter().map(SensitiveAttribute::domain_size).collect()
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| f64::from(y)).collect()
    }

    /// Indices of standardized numeric feature columns.
    pub fn numeric_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.kind, ColumnKind::Numeric { .. }))
            .map(|(j, _)| j)
            .collect()
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            features: self.features.select_rows(indices),
            columns: self.columns.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            unbiased_labels: self
                .unbiased_labels
                .as_ref()
                .map(|u| indices.iter().map(|&i| u[i]).collect()),
            sensitive: self
                .sensitive
                .iter()
                .map(|a| SensitiveAttribute {
                    codes: indices.iter().map(|&i| a.codes[i]).collect(),
                    ..a.clone()
                })
                .collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<TabularDataset> {
        let mut ds = self.clone();
        ds.labels = labels;
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<TabularDataset> {
        let mut ds = self.clone();
        ds.weights = weights;
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_features(&self, features: Matrix) -> Result<TabularDataset> {
        let mut ds = self.clone();
        ds.features = features;
        ds.validate()?;
        Ok(ds)
    }

    /// Drops the sensitive indicator columns from the model input.
    pub fn without_sensitive_features(&self) -> TabularDataset {
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| !matches!(c.kind, ColumnKind::Sensitive { .. }))
            .map(|(j, _)| j)
            .collect();
        let mut data = Vec::with_capacity(self.len() * keep.len());
        for i in 0..self.len() {
            let row = self.features.row(i);
            data.extend(keep.iter().map(|&j| row[j]));
        }
        TabularDataset {
            features: Matrix {
                rows: self.len(),
                cols: keep.len(),
                data,
            },
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            ..self.clone()
        }
    }

    /// Re-standardizes numeric columns with raw-unit `(mean, std)` pairs, one
    /// per numeric column in column order.
    pub(crate) fn restandardize_with(&self, stats: &[(f64, f64)]) -> TabularDataset {
        let mut ds = self.clone();
        let mut k = 0;
        for j in 0..ds.columns.len() {
            if let ColumnKind::Numeric { mean, std } = ds.columns[j].kind {
                let (new_mean, new_std) = stats[k];
                k += 1;
                for i in 0..ds.len() {
                    let raw = ds.features.get(i, j) * std + mean;
                    ds.features.set(i, j, (raw - new_mean) / new_std);
                }
                ds.columns[j].kind = ColumnKind::Numeric {
                    mean: new_mean,
                    std: new_std,
                };
            }
        }
        ds
    }

    /// Mean and standard deviation (population) of each numeric column in raw units.
    pub(crate) fn raw_numeric_stats(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (j, col) in self.columns.iter().enumerate() {
            if let ColumnKind::Numeric { mean, std } = col.kind {
                let raw: Vec<f64> = (0..self.len())
                    .map(|i| self.features.get(i, j) * std + mean)
                    .collect();
                out.push(mean_std(&raw));
            }
        }
        out
    }
}

/// Population mean and standard deviation; a zero deviation is reported as 1
/// so that constant columns standardize to zeros.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

/// Binarizes a numeric attribute at its arithmetic mean: code 1 iff the value
/// is strictly above the mean.
pub fn bin_numeric_attribute(values: &[f64]) -> Vec<usize> {
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|&v| usize::from(v > mean)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_at_mean() {
        assert_eq!(bin_numeric_attribute(&[1.0, 2.0, 3.0]), vec![0, 0, 1]);
        assert_eq!(bin_numeric_attribute(&[5.0, 5.0, 5.0]), vec![0, 0, 0]);
        assert_eq!(bin_numeric_attribute(&[-1.0, 1.0]), vec![0, 1]);
        assert_eq!(bin_numeric_attribute(&[20.0, 30.0, 40.0, 50.0]), vec![0, 0, 1, 1]);
    }

    #[test]
    fn rejects_bad_labels_and_weights() {
        let x = Matrix::zeros(2, 0);
        let err = TabularDataset::new(x.clone(), vec![], vec![0, 2], None, vec![], None);
        assert!(matches!(err, Err(Error::InvalidDataset(_))));
        let err = TabularDataset::new(x, vec![], vec![0, 1], None, vec![], Some(vec![1.0, 0.0]));
        assert!(matches!(err, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn rejects_out_of_domain_codes() {
        let attr = SensitiveAttribute {
            name: "s".into(),
            kind: AttributeKind::Categorical,
            categories: vec!["a".into(), "b".into()],
            codes: vec![0, 2],
        };
        let err = TabularDataset::new(Matrix::zeros(2, 0), vec![], vec![0, 1], None, vec![attr], None);
        assert!(matches!(err, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn select_rows_repeats() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let cols = vec![FeatureColumn {
            name: "x".into(),
            kind: ColumnKind::Numeric { mean: 0.0, std: 1.0 },
        }];
        let ds = TabularDataset::new(x, cols, vec![0, 1], None, vec![], None).unwrap();
        let sub = ds.select_rows(&[1, 1, 0]);
        assert_eq!(sub.labels(), &[1, 1, 0]);
        assert_eq!(sub.features().column(0), vec![2.0, 2.0, 1.0]);
    }
}
