use crate::error::Result;
use crate::rawscore::{raw_novelty_score, set_mean_confidence, ConfidenceSet};
use crate::softlabel::SoftLabelModel;

/// Negated largest entry of the set's mean confidence vector.
pub fn max_confidence_score(model: &SoftLabelModel, points: &[&[f64]]) -> Result<f64> {
    let cs = ConfidenceSet::from_model(model, points.iter().copied())?;
    let mean = set_mean_confidence(&cs);
    Ok(-mean.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Negated raw novelty score θ_S, with no learned calibration.
pub fn simple_threshold_score(model: &SoftLabelModel, points: &[&[f64]]) -> Result<f64> {
    let cs = ConfidenceSet::from_model(model, points.iter().copied())?;
    Ok(-raw_novelty_score(&cs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ClassIndex;

    /// Confidences equal `softmax(bias + x·slope)`, so each input picks a row.
    fn model(biases: &[f64], slopes: &[f64]) -> SoftLabelModel {
        let classes = ClassIndex::from_names((0..biases.len()).map(|i| format!("c{i}"))).unwrap();
        SoftLabelModel::new(slopes.to_vec(), biases.to_vec(), 1, classes).unwrap()
    }

    #[test]
    fn max_confidence_of_constant_model() {
        let m = model(&[0.7f64.ln(), 0.2f64.ln(), 0.1f64.ln()], &[0.0; 3]);
        let x: &[f64] = &[0.0];
        assert!((max_confidence_score(&m, &[x]).unwrap() + 0.7).abs() < 1e-12);
        let u = model(&[0.0; 4], &[0.0; 4]);
        assert!((max_confidence_score(&u, &[x]).unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn max_confidence_ignores_member_order() {
        let m = model(&[0.0, 0.0, 0.0], &[1.0, -1.0, 0.5]);
        let (a, b, c): (&[f64], &[f64], &[f64]) = (&[0.3], &[-2.0], &[1.1]);
        let s1 = max_confidence_score(&m, &[a, b, c]).unwrap();
        let s2 = max_confidence_score(&m, &[c, a, b]).unwrap();
        assert!((s1 - s2).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_negated_theta() {
        let m = model(&[0.6f64.ln(), 0.3f64.ln(), 0.1f64.ln()], &[0.0; 3]);
        let x: &[f64] = &[5.0];
        assert!((simple_threshold_score(&m, &[x]).unwrap() + 2.0).abs() < 1e-12);
        let u = model(&[0.0; 3], &[0.0; 3]);
        assert_eq!(simple_threshold_score(&u, &[x]).unwrap(), -1.0);
    }

    #[test]
    fn threshold_order_reverses_theta_order() {
        let m = model(&[0.0, 0.0], &[1.0, -1.0]);
        let (near, far): (&[f64], &[f64]) = (&[0.1], &[2.0]);
        assert!(
            simple_threshold_score(&m, &[near]).unwrap()
                > simple_threshold_score(&m, &[far]).unwrap()
        );
    }
}
