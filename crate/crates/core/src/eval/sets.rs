use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{rng_from, stable_hash};

/// A test set: row indices into the test dataset, all of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSet {
    pub rows: Vec<usize>,
    pub class: usize,
    pub is_novel: bool,
}

impl TestSet {
    pub fn points<'a>(&self, ds: &'a LabeledDataset) -> Vec<&'a [f64]> {
        self.rows.iter().map(|&i| ds.row(i)).collect()
    }
}

/// Shuffles each class and cuts it into disjoint sets of `set_size`; classes
/// with fewer examples contribute nothing. `novel_classes` holds class names.
pub fn sample_test_sets(
    test: &LabeledDataset,
    novel_classes: &BTreeSet<String>,
    set_size: usize,
    seed: u64,
) -> Result<Vec<TestSet>> {
    if set_size == 0 {
        return Err(Error::invalid("set size must be positive"));
    }
    let mut sets = Vec::new();
    for class in 0..test.num_classes() {
        let name = test.classes().name(class);
        let mut rows = test.indices_of_class(class);
        rows.shuffle(&mut rng_from(seed, &[stable_hash(name)]));
        let is_novel = novel_classes.contains(name);
        sets.extend(rows.chunks_exact(set_size).map(|chunk| TestSet {
            rows: chunk.to_vec(),
            class,
            is_novel,
        }));
    }
    if sets.is_empty() {
        return Err(Error::invalid(format!(
            "no test class has {set_size} examples"
        )));
    }
    Ok(sets)
}
