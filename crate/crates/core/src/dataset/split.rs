use rand::seq::SliceRandom;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{rng_from, stable_hash};

/// Per-class three-way split: multiclass training, binary training, test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub multiclass_fraction: f64,
    pub binary_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.multiclass_fraction, self.binary_fraction);
        if !(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0) {
            return Err(Error::invalid("split fractions must lie in (0, 1)"));
        }
        if a + b > 1.0 {
            return Err(Error::invalid(format!(
                "split fractions sum to {} > 1",
                a + b
            )));
        }
        Ok(())
    }

    /// Part sizes for a class of `n` examples: floor for the first two parts,
    /// at least one each, remainder to test.
    pub fn part_sizes(&self, n: usize) -> Option<(usize, usize, usize)> {
        // The epsilon keeps e.g. 0.6 * 10 from flooring to 5.
        let part = |f: f64| ((n as f64 * f + 1e-9).floor() as usize).max(1);
        let (m, b) = (part(self.multiclass_fraction), part(self.binary_fraction));
        (m + b < n).then(|| (m, b, n - m - b))
    }
}

/// Splits every class independently. The shuffle of a class depends only on
/// the seed and the class name, and each part keeps dataset row order.
pub fn split_per_class(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let mut parts: [Vec<usize>; 3] = Default::default();
    for class in 0..ds.num_classes() {
        let name = ds.classes().name(class);
        let mut rows = ds.indices_of_class(class);
        let (m, b, _) = spec
            .part_sizes(rows.len())
            .ok_or_else(|| Error::ClassTooSmall {
                class: name.to_string(),
                count: rows.len(),
                purpose: "give every split part an example",
            })?;
        rows.shuffle(&mut rng_from(spec.seed, &[stable_hash(name)]));
        parts[0].extend_from_slice(&rows[..m]);
        parts[1].extend_from_slice(&rows[m..m + b]);
        parts[2].extend_from_slice(&rows[m + b..]);
    }
    let [mut multi, mut binary, mut test] = parts;
    multi.sort_unstable();
    binary.sort_unstable();
    test.sort_unstable();
    Ok((ds.select(&multi)?, ds.select(&binary)?, ds.select(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(per_class: &[usize]) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                rows.push(vec![(c * 100 + i) as f64]);
                labels.push(format!("k{c}"));
            }
        }
        LabeledDataset::from_rows(&rows, &labels).unwrap()
    }

    fn spec(seed: u64) -> SplitSpec {
        SplitSpec {
            multiclass_fraction: 0.6,
            binary_fraction: 0.1,
            seed,
        }
    }

    #[test]
    fn ten_examples_split_six_one_three() {
        let ds = dataset(&[10, 10]);
        let (m, b, t) = split_per_class(&ds, &spec(3)).unwrap();
        assert_eq!(m.class_counts(), vec![6, 6]);
        assert_eq!(b.class_counts(), vec![1, 1]);
        assert_eq!(t.class_counts(), vec![3, 3]);
    }

    #[test]
    fn parts_are_disjoint_and_cover_the_data() {
        let ds = dataset(&[10, 7, 23]);
        let (m, b, t) = split_per_class(&ds, &spec(9)).unwrap();
        let mut seen: Vec<f64> = m
            .features()
            .iter()
            .chain(b.features())
            .chain(t.features())
            .copied()
            .collect();
        seen.sort_by(f64::total_cmp);
        let mut all = ds.features().to_vec();
        all.sort_by(f64::total_cmp);
        assert_eq!(seen, all);
    }

    #[test]
    fn same_seed_same_split() {
        let ds = dataset(&[12, 15]);
        let a = split_per_class(&ds, &spec(5)).unwrap();
        let b = split_per_class(&ds, &spec(5)).unwrap();
        assert_eq!(a, b);
        let c = split_per_class(&ds, &spec(6)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn tiny_class_is_rejected() {
        let ds = dataset(&[10, 2]);
        assert!(matches!(
            split_per_class(&ds, &spec(1)),
            Err(Error::ClassTooSmall { count: 2, .. })
        ));
        // three examples still yield one per part
        assert_eq!(spec(1).part_sizes(3), Some((1, 1, 1)));
    }

    #[test]
    fn invalid_fractions_are_rejected() {
        let bad = SplitSpec {
            multiclass_fraction: 0.8,
            binary_fraction: 0.3,
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}
