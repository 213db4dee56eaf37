use super::ScorePair;
use crate::error::{Error, Result};

const ITERATIONS: usize = 2000;
const INITIAL_STEP: f64 = 1.0;

/// Per-feature z-scoring of `(ln θ_S, ln θ_class)`, recorded at training
/// time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

fn log_features(pair: ScorePair) -> [f64; 2] {
    [pair.theta_set.ln(), pair.theta_class.ln()]
}

impl Standardizer {
    pub fn apply(&self, pair: ScorePair) -> [f64; 2] {
        let x = log_features(pair);
        [
            (x[0] - self.mean[0]) / self.std[0],
            (x[1] - self.mean[1]) / self.std[1],
        ]
    }
}

/// Linear decision rule on standardized log-scores; positive means novel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSeparator {
    pub w: [f64; 2],
    pub b: f64,
    pub standardizer: Standardizer,
}

impl LinearSeparator {
    pub fn decision(&self, pair: ScorePair) -> f64 {
        let z = self.standardizer.apply(pair);
        self.w[0] * z[0] + self.w[1] * z[1] + self.b
    }

    pub fn is_novel(&self, pair: ScorePair) -> bool {
        self.decision(pair) > 0.0
    }
}

fn fit_standardizer(pairs: &[ScorePair]) -> Result<Standardizer> {
    let n = pairs.len() as f64;
    let logs: Vec<[f64; 2]> = pairs.iter().map(|&p| log_features(p)).collect();
    let mut mean = [0.0; 2];
    for x in &logs {
        mean[0] += x[0];
        mean[1] += x[1];
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 2];
    for x in &logs {
        var[0] += (x[0] - mean[0]).powi(2);
        var[1] += (x[1] - mean[1]).powi(2);
    }
    let std = var.map(|v| (v / n).sqrt());
    let scale = |m: f64| m.abs().max(1.0) * 1e-12;
    let degenerate = [std[0] <= scale(mean[0]), std[1] <= scale(mean[1])];
    if degenerate[0] && degenerate[1] {
        return Err(Error::invalid(
            "score pairs have zero variance in both coordinates",
        ));
    }
    Ok(Standardizer {
        mean,
        std: [
            if degenerate[0] { 1.0 } else { std[0] },
            if degenerate[1] { 1.0 } else { std[1] },
        ],
    })
}

/// Class-balanced hinge loss plus `‖w‖² / (2 c_reg)`, minimized by
/// full-batch subgradient descent with `1/√t` steps. The best iterate is kept.
pub fn train_linear_svm(
    novel: &[ScorePair],
    known: &[ScorePair],
    c_reg: f64,
) -> Result<LinearSeparator> {
    if novel.is_empty() || known.is_empty() {
        return Err(Error::invalid(format!(
            "linear SVM needs both classes ({} novel, {} known pairs)",
            novel.len(),
            known.len()
        )));
    }
    if !(c_reg > 0.0 && c_reg.is_finite()) {
        return Err(Error::invalid(
            "SVM regularization constant must be positive",
        ));
    }
    if novel
        .iter()
        .chain(known)
        .any(|p| !p.theta_set.is_finite() || !p.theta_class.is_finite())
    {
        return Err(Error::NonFinite("score pairs"));
    }
    if novel
        .iter()
        .chain(known)
        .any(|p| p.theta_set <= 0.0 || p.theta_class <= 0.0)
    {
        return Err(Error::invalid("score pairs must be positive"));
    }
    let all: Vec<ScorePair> = novel.iter().chain(known).copied().collect();
    let standardizer = fit_standardizer(&all)?;
    let groups: [(Vec<[f64; 2]>, f64); 2] = [
        (novel.iter().map(|&p| standardizer.apply(p)).collect(), 1.0),
        (known.iter().map(|&p| standardizer.apply(p)).collect(), -1.0),
    ];

    let lambda = 1.0 / c_reg;
    let objective_and_subgradient = |w: [f64; 2], b: f64| -> (f64, [f64; 2], f64) {
        let mut obj = 0.5 * lambda * (w[0] * w[0] + w[1] * w[1]);
        let mut gw = [lambda * w[0], lambda * w[1]];
        let mut gb = 0.0;
        for (points, y) in &groups {
            let weight = 0.5 / points.len() as f64;
            for z in points {
                let margin = y * (w[0] * z[0] + w[1] * z[1] + b);
                if margin < 1.0 {
                    obj += weight * (1.0 - margin);
                    gw[0] -= weight * y * z[0];
                    gw[1] -= weight * y * z[1];
                    gb -= weight * y;
                }
            }
        }
        (obj, gw, gb)
    };

    let (mut w, mut b) = ([0.0; 2], 0.0);
    let (mut best_obj, mut best) = (f64::INFINITY, (w, b));
    for t in 1..=ITERATIONS {
        let (obj, gw, gb) = objective_and_subgradient(w, b);
        if obj < best_obj {
            best_obj = obj;
            best = (w, b);
        }
        let step = INITIAL_STEP / (t as f64).sqrt();
        w = [w[0] - step * gw[0], w[1] - step * gw[1]];
        b -= step * gb;
    }
    let (obj, _, _) = objective_and_subgradient(w, b);
    if obj < best_obj {
        best = (w, b);
    }
    Ok(LinearSeparator {
        w: best.0,
        b: best.1,
        standardizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(theta_set: f64, theta_class: f64) -> ScorePair {
        ScorePair {
            theta_set,
            theta_class,
        }
    }

    #[test]
    fn separable_clouds() {
        let novel = vec![pair(1.0, 5.0); 4];
        let known = vec![pair(9.0, 5.0); 12];
        let sep = train_linear_svm(&novel, &known, 10.0).unwrap();
        assert!(sep.is_novel(pair(1.0, 5.0)));
        assert!(!sep.is_novel(pair(9.0, 5.0)));
        assert!(sep.w[0] < 0.0);
    }

    #[test]
    fn swapping_classes_negates_the_decision() {
        let novel = vec![pair(1.2, 6.0), pair(1.5, 3.0), pair(2.5, 8.0)];
        let known = vec![
            pair(4.0, 6.0),
            pair(7.5, 3.0),
            pair(3.0, 9.0),
            pair(1.4, 2.0),
        ];
        let a = train_linear_svm(&novel, &known, 1.0).unwrap();
        let b = train_linear_svm(&known, &novel, 1.0).unwrap();
        for p in novel.iter().chain(&known) {
            assert!((a.decision(*p) + b.decision(*p)).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_and_empty_inputs() {
        let same = vec![pair(2.0, 2.0); 3];
        assert!(train_linear_svm(&same, &same, 1.0).is_err());
        assert!(train_linear_svm(&[], &same, 1.0).is_err());
        // one constant coordinate is fine
        let novel = vec![pair(1.0, 3.0); 2];
        let known = vec![pair(5.0, 3.0); 2];
        let sep = train_linear_svm(&novel, &known, 1.0).unwrap();
        assert_eq!(sep.standardizer.std[1], 1.0);
        assert!(sep.is_novel(pair(1.0, 3.0)));
    }
}
