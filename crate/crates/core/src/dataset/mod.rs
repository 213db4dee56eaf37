//! Labeled feature data: ingestion, per-class splitting, synthetic
//! generation and PCA preprocessing.

mod csv;
mod pca;
mod split;
mod synth;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use self::csv::{load_csv, parse_csv, save_csv, to_csv_string};
pub use self::pca::{fit_pca, PcaModel};
pub use self::split::{split_per_class, SplitSpec};
pub use self::synth::{generate_synthetic, SynthSpec};

/// Bijection between class names and dense indices `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassIndex {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl ClassIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut index = Self::new();
        for name in names {
            let name = name.into();
            if index.lookup.contains_key(&name) {
                return Err(Error::invalid(format!("duplicate class name `{name}`")));
            }
            index.insert(name);
        }
        Ok(index)
    }

    /// Returns the index of `name`, appending it if unseen.
    pub fn insert(&mut self, name: String) -> usize {
        if let Some(&i) = self.lookup.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.lookup.insert(name.clone(), i);
        self.names.push(name);
        i
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Feature vectors with class labels. Rows are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    classes: ClassIndex,
}

impl LabeledDataset {
    /// Builds a dataset from rows and string labels; classes are indexed by
    /// first appearance.
    pub fn from_rows<S: AsRef<str>>(rows: &[Vec<f64>], labels: &[S]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut classes = ClassIndex::new();
        let mut features = Vec::with_capacity(rows.len() * dim);
        let mut label_ids = Vec::with_capacity(rows.len());
        for (row, label) in rows.iter().zip(labels) {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
            label_ids.push(classes.insert(label.as_ref().to_string()));
        }
        Self::from_parts(features, dim, label_ids, classes)
    }

    /// Builds a dataset from a flat row-major feature buffer.
    pub fn from_parts(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        classes: ClassIndex,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("dataset must contain at least one row"));
        }
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::invalid(format!(
                "feature buffer of length {} does not hold {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        let mut counts = vec![0usize; classes.len()];
        for &l in &labels {
            match counts.get_mut(l) {
                Some(c) => *c += 1,
                None => return Err(Error::invalid(format!("label index {l} out of range"))),
            }
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!(
                "class `{}` has no examples",
                classes.name(empty)
            )));
        }
        Ok(Self {
            features,
            dim,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &ClassIndex {
        &self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_name(&self, i: usize) -> &str {
        self.classes.name(self.labels[i])
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices of every example of class `class`, in dataset order.
    pub fn indices_of_class(&self, class: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// Rows of every example of class `class`.
    pub fn rows_of_class(&self, class: usize) -> Vec<&[f64]> {
        self.indices_of_class(class)
            .into_iter()
            .map(|i| self.row(i))
            .collect()
    }

    /// Keeps the given rows. Classes left without examples are dropped; the
    /// surviving classes keep their relative order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut present = vec![false; self.classes.len()];
        for &i in rows {
            present[self.labels[i]] = true;
        }
        let mut remap = vec![usize::MAX; self.classes.len()];
        let mut classes = ClassIndex::new();
        for (c, _) in present.iter().enumerate().filter(|(_, &p)| p) {
            remap[c] = classes.insert(self.classes.name(c).to_string());
        }
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        let mut labels = Vec::with_capacity(rows.len());
        for &i in rows {
            features.extend_from_slice(self.row(i));
            labels.push(remap[self.labels[i]]);
        }
        Self::from_parts(features, self.dim, labels, classes)
    }

    /// Keeps the examples whose class is in `classes` (indices into this
    /// dataset's class index).
    pub fn restrict_to_classes(&self, classes: &[usize]) -> Result<Self> {
        let mut keep = vec![false; self.classes.len()];
        for &c in classes {
            keep[c] = true;
        }
        let rows: Vec<usize> = (0..self.len()).filter(|&i| keep[self.labels[i]]).collect();
        if rows.is_empty() {
            return Err(Error::invalid("class restriction leaves no examples"));
        }
        self.select(&rows)
    }

    /// Same labels, new features (one output row per input row).
    pub fn map_rows<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let mut features = Vec::new();
        let mut dim = None;
        for row in self.rows() {
            let out = f(row)?;
            match dim {
                None => dim = Some(out.len()),
                Some(d) if d != out.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: out.len(),
                    })
                }
                _ => {}
            }
            features.extend(out);
        }
        Self::from_parts(
            features,
            dim.unwrap_or(0),
            self.labels.clone(),
            self.classes.clone(),
        )
    }

    /// Concatenates two datasets with the same feature dimension, merging
    /// class indices by name.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut classes = self.classes.clone();
        let mut labels = self.labels.clone();
        for &l in &other.labels {
            labels.push(classes.insert(other.classes.name(l).to_string()));
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        Self::from_parts(features, self.dim, labels, classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledDataset {
        LabeledDataset::from_rows(
            &[
                vec![0.0, 1.0],
                vec![2.0, 3.0],
                vec![4.0, 5.0],
                vec![6.0, 7.0],
            ],
            &["a", "b", "a", "c"],
        )
        .unwrap()
    }

    #[test]
    fn first_appearance_indexing() {
        let ds = toy();
        assert_eq!(ds.classes().names(), ["a", "b", "c"]);
        assert_eq!(ds.labels(), [0, 1, 0, 2]);
        assert_eq!(ds.class_counts(), vec![2, 1, 1]);
    }

    #[test]
    fn select_drops_missing_classes() {
        let ds = toy();
        let sub = ds.select(&[3, 0]).unwrap();
        assert_eq!(sub.classes().names(), ["a", "c"]);
        assert_eq!(sub.labels(), [1, 0]);
        assert_eq!(sub.row(0), &[6.0, 7.0]);
    }

    #[test]
    fn restrict_keeps_listed_classes() {
        let ds = toy();
        let sub = ds.restrict_to_classes(&[0]).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.num_classes(), 1);
        assert!(ds.restrict_to_classes(&[]).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = LabeledDataset::from_rows(&[vec![1.0], vec![1.0, 2.0]], &["a", "b"]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn concat_merges_classes_by_name() {
        let ds = toy();
        let other = LabeledDataset::from_rows(&[vec![9.0, 9.0]], &["c"]).unwrap();
        let both = ds.concat(&other).unwrap();
        assert_eq!(both.num_classes(), 3);
        assert_eq!(both.label(4), 2);
    }
}
