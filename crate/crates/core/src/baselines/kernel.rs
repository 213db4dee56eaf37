use super::squared_distance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `exp(-gamma ‖x - y‖²)`
    Rbf {
        gamma: f64,
    },
    /// `(x·y + coef0)^degree`
    Polynomial {
        degree: u32,
        coef0: f64,
    },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
            Kernel::Polynomial { degree, coef0 } => (dot(a, b) + coef0).powi(degree as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::invalid("RBF gamma must be positive"))
            }
            Kernel::Polynomial { degree: 0, .. } => {
                Err(Error::invalid("polynomial degree must be positive"))
            }
            _ => Ok(()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1 / median pairwise squared distance`, over at most the first 1000
/// points.
pub fn median_heuristic_gamma(points: &[&[f64]]) -> Result<f64> {
    let pts = &points[..points.len().min(1000)];
    if pts.len() < 2 {
        return Err(Error::invalid(
            "the median heuristic needs at least 2 points",
        ));
    }
    let mut d2 = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d2.push(squared_distance(pts[i], pts[j]));
        }
    }
    let mid = d2.len() / 2;
    let (_, median, _) = d2.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if !(median > 0.0) {
        return Err(Error::invalid(
            "all points coincide; cannot pick an RBF width",
        ));
    }
    Ok(1.0 / median)
}
