//! ν-one-class SVM trained on its dual by sequential minimal optimization.
//!
//! The dual is `min ½ αᵀKα` subject to `Σα = 1` and `0 ≤ α_i ≤ 1/(νn)`.
//! Each step moves mass between the maximal violating pair, which keeps the
//! equality constraint exact.

use super::{check_points, Kernel};
use crate::error::{Error, Result};

const KKT_TOLERANCE: f64 = 1e-4;
const BOUND_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    /// Rows with `α > 0`, flattened.
    pub support_vectors: Vec<f64>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    pub dim: usize,
    /// Maximal KKT violation at termination.
    pub kkt_residual: f64,
}

impl OcsvmModel {
    fn kernel(&self) -> Kernel {
        Kernel::Rbf { gamma: self.gamma }
    }

    /// `g(x) = Σ α_i k(x_i, x) − ρ`; negative outside the estimated support.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_points(&[x], self.dim)?;
        let kernel = self.kernel();
        let sum: f64 = self
            .support_vectors
            .chunks_exact(self.dim)
            .zip(&self.alphas)
            .map(|(sv, a)| a * kernel.eval(sv, x))
            .sum();
        Ok(sum - self.rho)
    }

    /// Negated mean decision value over the set.
    pub fn novelty_score(&self, points: &[&[f64]]) -> Result<f64> {
        check_points(points, self.dim)?;
        let mut total = 0.0;
        for p in points {
            total += self.decision(p)?;
        }
        Ok(-total / points.len() as f64)
    }
}

pub fn ocsvm_train(points: &[&[f64]], nu: f64, gamma: f64) -> Result<OcsvmModel> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("one-class SVM needs at least 2 points"));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid("nu must lie in (0, 1]"));
    }
    if nu * (n as f64) < 1.0 {
        return Err(Error::invalid(format!(
            "nu * n = {} < 1: the box constraint cannot hold Σα = 1",
            nu * n as f64
        )));
    }
    let dim = points[0].len();
    check_points(points, dim)?;
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("one-class SVM training points"));
    }
    let kernel = Kernel::Rbf { gamma };
    kernel.validate()?;

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(points[i], points[j]);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    let upper = 1.0 / (nu * n as f64);

    let mut alpha = vec![0.0; n];
    let full = ((nu * n as f64).floor() as usize).min(n);
    for a in alpha.iter_mut().take(full) {
        *a = upper;
    }
    if full < n {
        alpha[full] = (1.0 - full as f64 * upper).max(0.0);
    }
    let mut grad = vec![0.0; n];
    for (j, &a) in alpha.iter().enumerate().filter(|(_, &a)| a > 0.0) {
        for (g, k) in grad.iter_mut().zip(&gram[j * n..(j + 1) * n]) {
            *g += a * k;
        }
    }

    let max_iter = 1000 * n.max(100);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        // i: can grow, smallest gradient; j: can shrink, largest gradient
        let (mut i, mut gi) = (usize::MAX, f64::INFINITY);
        let (mut j, mut gj) = (usize::MAX, f64::NEG_INFINITY);
        for t in 0..n {
            if alpha[t] < upper - BOUND_EPS && grad[t] < gi {
                i = t;
                gi = grad[t];
            }
            if alpha[t] > BOUND_EPS && grad[t] > gj {
                j = t;
                gj = grad[t];
            }
        }
        residual = if i == usize::MAX || j == usize::MAX {
            0.0
        } else {
            gj - gi
        };
        if residual <= KKT_TOLERANCE {
            break;
        }
        let eta = (gram[i * n + i] + gram[j * n + j] - 2.0 * gram[i * n + j]).max(1e-12);
        let step = ((gj - gi) / eta).min(upper - alpha[i]).min(alpha[j]);
        alpha[i] += step;
        alpha[j] -= step;
        let (row_i, row_j) = (&gram[i * n..(i + 1) * n], &gram[j * n..(j + 1) * n]);
        for ((g, ki), kj) in grad.iter_mut().zip(row_i).zip(row_j) {
            *g += step * (ki - kj);
        }
        iterations += 1;
    }
    if residual > KKT_TOLERANCE {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }

    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > BOUND_EPS && alpha[t] < upper - BOUND_EPS)
        .map(|t| grad[t])
        .collect();
    let rho = if free.is_empty() {
        // every multiplier at a bound: ρ anywhere in the KKT interval
        let lo = (0..n)
            .filter(|&t| alpha[t] < upper - BOUND_EPS)
            .map(|t| grad[t])
            .fold(f64::INFINITY, f64::min);
        let hi = (0..n)
            .filter(|&t| alpha[t] > BOUND_EPS)
            .map(|t| grad[t])
            .fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            _ => hi,
        }
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (t, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.extend_from_slice(points[t]);
            alphas.push(a);
        }
    }
    log::debug!(
        "ocsvm: n={n} nu={nu} iterations={iterations} support={} rho={rho:.4e}",
        alphas.len()
    );
    Ok(OcsvmModel {
        support_vectors,
        alphas,
        rho,
        gamma,
        nu,
        dim,
        kkt_residual: residual,
    })
}
