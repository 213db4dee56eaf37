use nalgebra::{DMatrix, SymmetricEigen};

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Principal-component projection fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// d×m, one orthonormal component per column.
    pub components: DMatrix<f64>,
    /// Sample-covariance eigenvalues of the kept components, descending.
    pub variances: Vec<f64>,
}

/// Top-`m` eigenvectors of the sample covariance (N−1 denominator). Each
/// component's largest-magnitude entry is made positive.
pub fn fit_pca(ds: &LabeledDataset, m: usize) -> Result<PcaModel> {
    let (n, d) = (ds.len(), ds.dim());
    if m == 0 || m > n.min(d) {
        return Err(Error::invalid(format!(
            "PCA target dimension {m} must lie in 1..={}",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for row in ds.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in ds.rows() {
        for (c, (v, mu)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
            *c = v - mu;
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut components = DMatrix::<f64>::zeros(d, m);
    let mut variances = Vec::with_capacity(m);
    for (out, &src) in order.iter().take(m).enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
        components.set_column(out, &col);
        variances.push(eig.eigenvalues[src].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        variances,
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok((0..self.output_dim())
            .map(|k| {
                self.components
                    .column(k)
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (v, mu))| c * (v - mu))
                    .sum()
            })
            .collect())
    }

    /// Centers and projects every row of `ds`.
    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        ds.map_rows(|row| self.transform(row))
    }

    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (k, zk) in z.iter().enumerate() {
            for (xi, c) in x.iter_mut().zip(self.components.column(k).iter()) {
                *xi += zk * c;
            }
        }
        x
    }
}
