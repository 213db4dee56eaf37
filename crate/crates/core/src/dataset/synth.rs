use rand_distr::{Distribution, Normal};

use super::{ClassIndex, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Isotropic Gaussian classes with randomly placed centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub examples_per_class: usize,
    /// Standard deviation of the class-center placement.
    pub center_spread: f64,
    /// Within-class standard deviation.
    pub within_std: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid("synthetic data needs at least 2 classes"));
        }
        if self.dim == 0 || self.examples_per_class == 0 {
            return Err(Error::invalid(
                "dimension and examples per class must be positive",
            ));
        }
        if !(self.center_spread > 0.0 && self.center_spread.is_finite()) {
            return Err(Error::invalid("center_spread must be positive"));
        }
        if !(self.within_std > 0.0 && self.within_std.is_finite()) {
            return Err(Error::invalid("within_std must be positive"));
        }
        Ok(())
    }
}

/// Class `c` is named `class{c}`; rows are grouped by class.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let classes = ClassIndex::from_names((0..spec.num_classes).map(|c| format!("class{c}")))?;
    let n = spec.num_classes * spec.examples_per_class;
    let mut features = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    for c in 0..spec.num_classes {
        let mut rng = rng_from(spec.seed, &[c as u64]);
        let center: Vec<f64> = (0..spec.dim)
            .map(|_| spec.center_spread * unit.sample(&mut rng))
            .collect();
        for _ in 0..spec.examples_per_class {
            features.extend(
                center
                    .iter()
                    .map(|&m| m + spec.within_std * unit.sample(&mut rng)),
            );
            labels.push(c);
        }
    }
    LabeledDataset::from_parts(features, spec.dim, labels, classes)
}
