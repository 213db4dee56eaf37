use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// One artificial split of the training classes into presumed-known and
/// presumed-novel. Class indices refer to the training class index and are
/// kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub index: usize,
    pub known: Vec<usize>,
    pub novel: Vec<usize>,
}

impl Partition {
    pub fn new(index: usize, mut known: Vec<usize>, mut novel: Vec<usize>) -> Result<Self> {
        known.sort_unstable();
        novel.sort_unstable();
        if novel.is_empty() {
            return Err(Error::invalid(format!(
                "partition {index} has no presumed-novel class"
            )));
        }
        if known.len() < 2 {
            return Err(Error::invalid(format!(
                "partition {index} needs at least 2 presumed-known classes"
            )));
        }
        let all: BTreeSet<usize> = known.iter().chain(&novel).copied().collect();
        if all.len() != known.len() + novel.len() {
            return Err(Error::invalid(format!("partition {index} is not disjoint")));
        }
        Ok(Self {
            index,
            known,
            novel,
        })
    }

    pub fn is_known(&self, class: usize) -> bool {
        self.known.binary_search(&class).is_ok()
    }

    pub fn is_novel(&self, class: usize) -> bool {
        self.novel.binary_search(&class).is_ok()
    }

    /// Position of `class` within the presumed-known list, which is also its
    /// output index in the partition's soft-label model.
    pub fn known_position(&self, class: usize) -> Option<usize> {
        self.known.binary_search(&class).ok()
    }
}

/// Number of presumed-novel classes per partition.
pub fn novel_count(num_classes: usize, novel_fraction: f64) -> usize {
    ((novel_fraction * num_classes as f64).round() as usize).max(1)
}

/// Builds `count` partitions over classes `0..num_classes`.
///
/// Presumed-novel groups are consecutive chunks of a stream of seeded class
/// permutations, so every class is presumed novel either floor or ceil of
/// `count * m / num_classes` times. The first `j` partitions do not depend on
/// `count`.
pub fn make_partitions(
    num_classes: usize,
    count: usize,
    novel_fraction: f64,
    seed: u64,
) -> Result<Vec<Partition>> {
    if !(novel_fraction > 0.0 && novel_fraction < 1.0) {
        return Err(Error::invalid("novel_fraction must lie in (0, 1)"));
    }
    if count == 0 {
        return Err(Error::invalid("at least one partition is required"));
    }
    let m = novel_count(num_classes, novel_fraction);
    if m + 2 > num_classes {
        return Err(Error::invalid(format!(
            "{m} presumed-novel classes out of {num_classes} leave fewer than 2 presumed-known"
        )));
    }

    let mut perm_no = 0u64;
    let mut perm: Vec<usize> = Vec::new();
    let mut pos = 0;
    let mut partitions = Vec::with_capacity(count);
    for index in 0..count {
        let mut chunk: Vec<usize> = Vec::with_capacity(m);
        while chunk.len() < m {
            if pos == perm.len() {
                perm = (0..num_classes).collect();
                perm.shuffle(&mut rng_from(seed, &[perm_no]));
                perm_no += 1;
                pos = 0;
            }
            // A chunk straddling two permutations may meet a class it already
            // holds; swap in the next unused class of the current permutation.
            if chunk.contains(&perm[pos]) {
                let swap = (pos + 1..perm.len())
                    .find(|&j| !chunk.contains(&perm[j]))
                    .expect("a fresh permutation has more classes than the chunk");
                perm.swap(pos, swap);
            }
            chunk.push(perm[pos]);
            pos += 1;
        }
        let known = (0..num_classes).filter(|c| !chunk.contains(c)).collect();
        partitions.push(Partition::new(index, known, chunk)?);
    }
    Ok(partitions)
}
