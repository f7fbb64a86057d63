use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::features::{FeatureLayout, HarmonicMode};
use crate::math;
use crate::rng;
use crate::{Error, Result};

/// Labelled feature matrix.
///
/// Rows are finite, every class in the table has at least two instances and
/// the matrix is never empty.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: Vec<String>,
    feature_names: Vec<String>,
    provenance: String,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
        feature_names: Vec<String>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let d = Self::unchecked(rows, labels, classes, feature_names, provenance.into());
        d.validate_shape()?;
        for (class, &count) in d.class_counts().iter().enumerate() {
            if count < 2 {
                return Err(Error::ClassTooSmall { class, count });
            }
        }
        Ok(d)
    }

    /// Dataset over the canonical feature layout.
    pub fn with_layout(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
        layout: &FeatureLayout,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let names = layout.names().map(String::from).collect();
        Self::new(rows, labels, classes, names, provenance)
    }

    fn unchecked(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
        feature_names: Vec<String>,
        provenance: String,
    ) -> Self {
        Self {
            rows,
            labels,
            classes,
            feature_names,
            provenance,
        }
    }

    fn validate_shape(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidDataset("no instances".into()));
        }
        if self.labels.len() != self.rows.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                self.rows.len(),
                self.labels.len()
            )));
        }
        let f = self.feature_names.len();
        if f == 0 {
            return Err(Error::InvalidDataset("no features".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != f {
                return Err(Error::InvalidDataset(format!(
                    "row {r} has {} values, expected {f}",
                    row.len()
                )));
            }
            if let Some(c) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(format!("non-finite value at row {r}, column {c}")));
            }
        }
        if let Some(r) = self.labels.iter().position(|&l| l >= self.classes.len()) {
            return Err(Error::InvalidDataset(format!(
                "row {r} has label {} but only {} classes exist",
                self.labels[r],
                self.classes.len()
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// The canonical layout whose names match this dataset's columns, if any.
    pub fn layout(&self) -> Option<FeatureLayout> {
        [HarmonicMode::Complex, HarmonicMode::Magnitude]
            .into_iter()
            .map(FeatureLayout::new)
            .find(|l| l.names().eq(self.feature_names.iter().map(String::as_str)))
    }

    /// Rows restricted to `selected` columns, in that order.
    pub fn project(&self, selected: &[usize]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| selected.iter().map(|&k| r[k]).collect())
            .collect()
    }

    /// Instances at `indices`, keeping class table and feature names. The
    /// result may violate the two-per-class rule; it is meant for internal
    /// partitions such as cross-validation folds.
    pub(crate) fn subset(&self, indices: &[usize]) -> Self {
        Self::unchecked(
            indices.iter().map(|&k| self.rows[k].clone()).collect(),
            indices.iter().map(|&k| self.labels[k]).collect(),
            self.classes.clone(),
            self.feature_names.clone(),
            self.provenance.clone(),
        )
    }

    /// Instance indices grouped by class.
    pub(crate) fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut by = vec![Vec::new(); self.classes.len()];
        for (k, &l) in self.labels.iter().enumerate() {
            by[l].push(k);
        }
        by
    }
}

/// Stratified train/test split.
///
/// Each class contributes `round(train_frac · n_c)` instances to the training
/// side, clamped so both sides keep at least two instances of the class (one,
/// for classes of two or three). Partitions keep the original row order.
pub fn split_dataset(d: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    let mut train = Vec::with_capacity(d.len());
    let mut test = Vec::with_capacity(d.len());
    for (class, mut idx) in d.indices_by_class().into_iter().enumerate() {
        let n = idx.len();
        if n < 2 {
            return Err(Error::ClassTooSmall { class, count: n });
        }
        let keep = if n >= 4 { 2 } else { 1 };
        let n_train = (math::round(train_frac * n as f64) as usize).clamp(keep, n - keep);
        idx.shuffle(&mut rng::stream(seed, class as u64));
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.subset(&train), d.subset(&test)))
}

/// Stratified k-fold assignment: `folds[k]` lists the held-out indices of fold k.
pub fn stratified_folds(d: &Dataset, n_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {n_folds}")));
    }
    let mut folds = vec![Vec::new(); n_folds];
    let mut next = 0;
    for (class, mut idx) in d.indices_by_class().into_iter().enumerate() {
        idx.shuffle(&mut rng::stream(seed, class as u64));
        for k in idx {
            folds[next].push(k);
            next = (next + 1) % n_folds;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
