//! Set-level confidence statistics: the predicted assignment of a set, and
//! the ratio between its two largest mean confidences.

use crate::error::{Error, Result};
use crate::softlabel::{argmax, SoftLabelModel};

const SUM_TOLERANCE: f64 = 1e-9;

/// Confidence vectors of the `s` members of one set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    rows: Vec<Vec<f64>>,
}

impl ConfidenceSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = match rows.first() {
            Some(r) => r.len(),
            None => return Err(Error::invalid("a confidence set needs at least one member")),
        };
        if k < 2 {
            return Err(Error::invalid("confidence vectors need at least 2 classes"));
        }
        for row in &rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            if row.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::invalid("confidences must be positive and finite"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::invalid(format!("confidences sum to {sum}, not 1")));
            }
        }
        Ok(Self { rows })
    }

    /// Runs every point through `model`.
    pub fn from_model<'a, I>(model: &SoftLabelModel, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        Self::new(model.confidence_rows(points)?)
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn num_classes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Column-wise mean of the member confidences.
pub fn set_mean_confidence(cs: &ConfidenceSet) -> Vec<f64> {
    let mut mean = vec![0.0; cs.num_classes()];
    for row in cs.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let s = cs.size() as f64;
    mean.iter_mut().for_each(|m| *m /= s);
    mean
}

/// Class with the largest mean confidence; ties go to the lowest index.
pub fn predicted_assignment(cs: &ConfidenceSet) -> usize {
    argmax(&set_mean_confidence(cs))
}

/// Largest over second-largest entry of a confidence vector.
pub fn top_two_ratio(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::invalid("the top-two ratio needs at least 2 classes"));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &x in v {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    Ok(first / second)
}

/// Raw novelty score of a set: the top-two ratio of its mean confidence.
/// Always `>= 1`; values near 1 indicate an ambiguous set.
pub fn raw_novelty_score(cs: &ConfidenceSet) -> Result<f64> {
    top_two_ratio(&set_mean_confidence(cs))
}

/// Per-class calibration value: the raw novelty score of the set formed by
/// all calibration examples of one class.
pub fn class_novelty_score<'a, I>(model: &SoftLabelModel, class_examples: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows = model.confidence_rows(class_examples)?;
    if rows.is_empty() {
        return Err(Error::invalid("class calibration set is empty"));
    }
    raw_novelty_score(&ConfidenceSet::new(rows)?)
}
