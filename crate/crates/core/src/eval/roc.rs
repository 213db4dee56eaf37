use crate::error::{Error, Result};

/// A scored set with its ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSet {
    pub score: f64,
    pub is_novel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Operating points for thresholds at every distinct score (a set is called
/// novel when `score >= threshold`), bracketed by `+∞ → (0,0)` and
/// `−∞ → (1,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

pub fn roc_curve(scored: &[ScoredSet]) -> Result<RocCurve> {
    let positives = scored.iter().filter(|s| s.is_novel).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid(format!(
            "ROC needs both novel and known sets ({positives} novel, {negatives} known)"
        )));
    }
    if scored.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::NonFinite("novelty scores"));
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        while i < sorted.len() && sorted[i].score == threshold {
            if sorted[i].is_novel {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    Ok(RocCurve { points })
}

impl RocCurve {
    /// Trapezoidal area; ties contribute half, as in the pairwise definition.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
            .sum()
    }

    /// Error rate where the polyline crosses `tpr = 1 − fpr`.
    pub fn eer(&self) -> f64 {
        // fpr + tpr - 1 rises from -1 to 1 along the curve
        for w in self.points.windows(2) {
            let s0 = w[0].fpr + w[0].tpr - 1.0;
            let s1 = w[1].fpr + w[1].tpr - 1.0;
            if s0 < 0.0 && s1 >= 0.0 {
                let t = -s0 / (s1 - s0);
                return w[0].fpr + t * (w[1].fpr - w[0].fpr);
            }
        }
        0.5
    }

    /// `threshold,fpr,tpr` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{:?},{:?},{:?}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

pub fn auc(curve: &RocCurve) -> f64 {
    curve.auc()
}

pub fn eer(curve: &RocCurve) -> f64 {
    curve.eer()
}
