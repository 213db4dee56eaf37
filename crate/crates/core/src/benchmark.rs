//! The fixed synthetic benchmark: 20 Gaussian classes in 16 dimensions,
//! evaluated with 10 folds (2 held-out classes each) repeated 3 times.

use crate::dataset::SynthSpec;
use crate::ensemble::EnsembleParams;
use crate::eval::{CvConfig, Method};

pub const SEED: u64 = 20160601;

pub fn synth_spec() -> SynthSpec {
    SynthSpec {
        num_classes: 20,
        dim: 16,
        examples_per_class: 100,
        center_spread: 1.2,
        within_std: 1.0,
        seed: SEED,
    }
}

/// Cross-validation over the methods whose trends the benchmark tracks.
pub fn cv_config() -> CvConfig {
    CvConfig {
        folds: 10,
        repeats: 3,
        set_sizes: vec![1, 5],
        multiclass_fraction: 0.6,
        binary_fraction: 0.1,
        methods: vec![Method::Ensemble, Method::Threshold, Method::MaxConfidence],
        ensemble: EnsembleParams {
            num_partitions: 30,
            novel_fraction: 0.1,
            ..EnsembleParams::default()
        },
        sub_sizes: vec![5, 10, 20],
        seed: SEED,
        keep_curves: false,
        ..CvConfig::default()
    }
}
