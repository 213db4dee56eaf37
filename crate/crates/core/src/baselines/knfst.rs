//! Kernel null-space novelty detection.
//!
//! Training points are mapped to explicit coordinates spanning the range of
//! the kernel matrix. Within those coordinates we keep the directions along
//! which every class has zero scatter but the data as a whole does not;
//! projected onto them, each class collapses to a single target point. The
//! novelty score is the distance to the nearest target.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_points, Kernel};
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RELATIVE_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KnfstModel {
    /// Training rows, flattened, kept for kernel evaluation.
    pub training_points: Vec<f64>,
    pub dim: usize,
    /// n×q map from a kernel vector to null-space coordinates.
    pub projection: DMatrix<f64>,
    /// One q-dimensional target per class, in label order.
    pub class_targets: Vec<DVector<f64>>,
    pub kernel: Kernel,
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Scatter of `coords` rows around their group means (`groups[i]` is the
/// group of row i) and around the global mean.
fn scatters(
    coords: &DMatrix<f64>,
    labels: &[usize],
    num_classes: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, r) = coords.shape();
    let mut class_mean = DMatrix::<f64>::zeros(num_classes, r);
    let mut counts = vec![0usize; num_classes];
    for i in 0..n {
        counts[labels[i]] += 1;
        let mut row = class_mean.row_mut(labels[i]);
        row += coords.row(i);
    }
    for (c, &count) in counts.iter().enumerate() {
        let mut row = class_mean.row_mut(c);
        row /= count as f64;
    }
    let global_mean = coords.row_mean();
    let mut within = coords.clone();
    let mut total = coords.clone();
    for (i, &label) in labels.iter().enumerate() {
        let mut w = within.row_mut(i);
        w -= class_mean.row(label);
        let mut t = total.row_mut(i);
        t -= &global_mean;
    }
    (within.transpose() * within, total.transpose() * total)
}

/// `labels[i]` is the class (0..num_classes) of `points[i]`.
pub fn knfst_train(
    points: &[&[f64]],
    labels: &[usize],
    kernel: Kernel,
    max_points: usize,
) -> Result<KnfstModel> {
    let n = points.len();
    if n != labels.len() || n == 0 {
        return Err(Error::invalid("KNFST needs one label per training point"));
    }
    if n > max_points {
        return Err(Error::invalid(format!(
            "KNFST on {n} points exceeds the configured cap of {max_points}"
        )));
    }
    kernel.validate()?;
    let dim = points[0].len();
    check_points(points, dim)?;
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; num_classes];
    labels.iter().for_each(|&l| counts[l] += 1);
    if num_classes < 2 || counts.contains(&0) {
        return Err(Error::invalid(
            "KNFST needs at least 2 classes, each with an example",
        ));
    }

    let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(points[i], points[j]));
    let (values, vectors) = sorted_eigen(gram.clone());
    let top = values[0].max(0.0);
    let rank = values
        .iter()
        .take_while(|&&v| v > RELATIVE_CUTOFF * top)
        .count();
    if rank == 0 {
        return Err(Error::EmptyNullSpace);
    }
    // K ≈ Φ Φᵀ with Φ = V Λ^{1/2}; a kernel vector k maps to Λ^{-1/2} Vᵀ k.
    let basis = vectors.columns(0, rank).into_owned();
    let inv_sqrt = DVector::from_iterator(rank, values[..rank].iter().map(|v| 1.0 / v.sqrt()));
    let coord_map = DMatrix::from_fn(n, rank, |i, j| basis[(i, j)] * inv_sqrt[j]);
    let coords = &gram * &coord_map;

    let (within, total) = scatters(&coords, labels, num_classes);
    let (total_values, _) = sorted_eigen(total.clone());
    let scale = RELATIVE_CUTOFF * total_values[0].max(0.0);
    let (within_values, within_vectors) = sorted_eigen(within);
    let null: Vec<usize> = (0..rank).filter(|&i| within_values[i] < scale).collect();
    if null.is_empty() {
        return Err(Error::EmptyNullSpace);
    }
    let null_basis = within_vectors.select_columns(&null);

    // Drop null directions along which the data does not vary at all.
    let restricted = null_basis.transpose() * &total * &null_basis;
    let (spread_values, spread_vectors) = sorted_eigen(restricted);
    let keep = spread_values.iter().take_while(|&&v| v > scale).count();
    if keep == 0 {
        return Err(Error::EmptyNullSpace);
    }
    let directions = null_basis * spread_vectors.columns(0, keep);
    let projection = coord_map * directions;

    let projected = &gram * &projection;
    let mut class_targets = vec![DVector::<f64>::zeros(keep); num_classes];
    for i in 0..n {
        class_targets[labels[i]] += projected.row(i).transpose();
    }
    for (target, &c) in class_targets.iter_mut().zip(&counts) {
        *target /= c as f64;
    }
    log::debug!("knfst: n={n} rank={rank} null={} kept={keep}", null.len());
    Ok(KnfstModel {
        training_points: points.iter().flat_map(|p| p.iter().copied()).collect(),
        dim,
        projection,
        class_targets,
        kernel,
    })
}

impl KnfstModel {
    pub fn project(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_points(&[x], self.dim)?;
        let kvec = DVector::from_iterator(
            self.projection.nrows(),
            self.training_points
                .chunks_exact(self.dim)
                .map(|p| self.kernel.eval(p, x)),
        );
        Ok(self.projection.tr_mul(&kvec))
    }

    /// Distance from `x`'s projection to the nearest class target.
    pub fn point_score(&self, x: &[f64]) -> Result<f64> {
        let z = self.project(x)?;
        Ok(self
            .class_targets
            .iter()
            .map(|t| (&z - t).norm())
            .fold(f64::INFINITY, f64::min))
    }

    /// Mean of the per-point scores.
    pub fn novelty_score(&self, points: &[&[f64]]) -> Result<f64> {
        check_points(points, self.dim)?;
        let mut total = 0.0;
        for p in points {
            total += self.point_score(p)?;
        }
        Ok(total / points.len() as f64)
    }
}
