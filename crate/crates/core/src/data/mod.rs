//! Datasets: a dense numeric feature matrix with dense class ids.

mod csv;
mod synthetic;

pub use self::csv::{load_csv, load_feature_rows, write_csv, CsvSchema, LabelColumn};
pub use self::synthetic::{simulate_dataset, SyntheticSpec};

use crate::error::{Error, Result};

/// Row-major feature matrix plus class labels.
///
/// Labels are dense ids in `[0, n_classes)`; `class_names[id]` recovers the
/// original label text.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    n_features: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    class_names: Vec<String>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset with class names `"0"`, `"1"`, ...
    pub fn new(values: Vec<f64>, n_features: usize, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let class_names = (0..n_classes).map(|c| c.to_string()).collect();
        Self::with_names(values, n_features, labels, class_names, None)
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::InvalidDataset("rows have differing lengths".into()));
        }
        Self::new(rows.concat(), n_features, labels, n_classes)
    }

    pub fn with_names(
        values: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n_classes = class_names.len();
        if n_features == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        if values.len() != labels.len() * n_features {
            return Err(Error::InvalidDataset(format!(
                "{} values do not form {} rows of {} features",
                values.len(),
                labels.len(),
                n_features
            )));
        }
        if n_classes < 2 {
            return Err(Error::SingleClass);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidDataset(format!("label {bad} >= n_classes {n_classes}")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue { row: pos / n_features, column: pos % n_features });
        }
        if let Some(names) = &feature_names {
            if names.len() != n_features {
                return Err(Error::InvalidDataset("feature name count does not match columns".into()));
            }
        }
        Ok(Dataset {
            n_rows: labels.len(),
            n_features,
            values,
            labels,
            n_classes,
            class_names,
            feature_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features)
    }

    /// Rows at `indices` in the given order. Keeps the full class list even if
    /// some class no longer occurs.
    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            n_rows: indices.len(),
            n_features: self.n_features,
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Keeps only `columns`, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::EmptySelection);
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n_features) {
            return Err(Error::InvalidDataset(format!("column {bad} out of range")));
        }
        let mut values = Vec::with_capacity(self.n_rows * columns.len());
        for row in self.rows() {
            values.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            n_rows: self.n_rows,
            n_features: columns.len(),
            values,
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
            feature_names: self
                .feature_names
                .as_ref()
                .map(|names| columns.iter().map(|&c| names[c].clone()).collect()),
        })
    }

    /// Number of rows per class id.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_classes];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Column-major copy of the feature matrix.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features)
            .map(|f| self.rows().map(|r| r[f]).collect())
            .collect()
    }
}
