//! Comparison novelty scores. Every score here follows the convention that
//! larger means more novel, so one ROC harness serves all of them.

mod kernel;
mod knfst;
mod knn;
mod ocsvm;
mod softlabel_scores;

pub use self::kernel::{median_heuristic_gamma, Kernel};
pub use self::knfst::{knfst_train, KnfstModel};
pub use self::knn::KnnIndex;
pub use self::ocsvm::{ocsvm_train, OcsvmModel};
pub use self::softlabel_scores::{max_confidence_score, simple_threshold_score};

use crate::error::{Error, Result};

pub(crate) fn check_points(points: &[&[f64]], dim: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("cannot score an empty set"));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    Ok(())
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
