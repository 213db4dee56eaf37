//! The known-vs-novel ensemble.
//!
//! Training classes are repeatedly split into presumed-known and
//! presumed-novel groups. For each split a soft-label model is trained on the
//! presumed-known classes only, held-out examples of both groups are mapped
//! to `(θ_S, θ_class)` pairs, and a linear rule learns to tell the groups
//! apart. At test time a set's novelty score is the number of eligible rules
//! that call it novel; a rule is eligible when the set's globally predicted
//! class was presumed known in its split.

mod io;
mod partition;
mod svm;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rawscore::{top_two_ratio, ConfidenceSet};
use crate::rng::{derive_seed, rng_from};
use crate::softlabel::{argmax, train_softmax, SoftLabelModel, TrainConfig};

pub use self::partition::{make_partitions, novel_count, Partition};
pub use self::svm::{train_linear_svm, LinearSeparator, Standardizer};

/// Features of one set as seen by a partition's classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePair {
    pub theta_set: f64,
    pub theta_class: f64,
}

/// Confidence vectors of the held-out examples of one class, under a
/// partition model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassConfidences {
    pub class: usize,
    pub rows: Vec<Vec<f64>>,
}

/// Output of [`represent_partition`].
#[derive(Debug, Clone)]
pub struct PartitionRepresentation {
    pub partition: Partition,
    pub model: SoftLabelModel,
    /// Presumed-known held-out examples, grouped by class.
    pub known: Vec<ClassConfidences>,
    /// Presumed-novel held-out examples, grouped by class.
    pub novel: Vec<ClassConfidences>,
}

impl PartitionRepresentation {
    /// Calibration value of every presumed-known class, aligned with
    /// `partition.known`.
    pub fn theta_table(&self) -> Result<Vec<f64>> {
        self.known
            .iter()
            .map(|group| {
                if group.rows.is_empty() {
                    return Err(Error::invalid(format!(
                        "class {} has no calibration examples",
                        group.class
                    )));
                }
                crate::rawscore::raw_novelty_score(&ConfidenceSet::new(group.rows.clone())?)
            })
            .collect()
    }
}

/// Trains the partition model on the presumed-known classes of
/// `multiclass_train` and maps `binary_train` through it.
///
/// Both datasets must share the training class index.
pub fn represent_partition(
    partition: &Partition,
    multiclass_train: &LabeledDataset,
    binary_train: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<PartitionRepresentation> {
    if multiclass_train.classes() != binary_train.classes() {
        return Err(Error::invalid(
            "multiclass and binary training sets must share one class index",
        ));
    }
    let counts = multiclass_train.class_counts();
    if let Some(&missing) = partition
        .known
        .iter()
        .find(|&&c| counts.get(c).copied().unwrap_or(0) == 0)
    {
        return Err(Error::invalid(format!(
            "presumed-known class {missing} has no multiclass training examples"
        )));
    }
    let train = multiclass_train.restrict_to_classes(&partition.known)?;
    let model = train_softmax(&train, cfg)?;
    let group = |classes: &[usize]| -> Result<Vec<ClassConfidences>> {
        classes
            .iter()
            .map(|&class| {
                let rows = binary_train.rows_of_class(class);
                Ok(ClassConfidences {
                    class,
                    rows: model.confidence_rows(rows)?,
                })
            })
            .collect()
    };
    Ok(PartitionRepresentation {
        known: group(&partition.known)?,
        novel: group(&partition.novel)?,
        partition: partition.clone(),
        model,
    })
}

/// Mean of confidence rows.
fn mean_rows<R: AsRef<[f64]>>(rows: &[R]) -> Vec<f64> {
    let k = rows[0].as_ref().len();
    let mut mean = vec![0.0; k];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.as_ref()) {
            *m += v;
        }
    }
    let s = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= s);
    mean
}

/// `(θ_S, θ_ô)` for one set of confidence rows, where ô is the set's
/// assignment under the same model and `theta_table` is indexed by that
/// model's outputs.
pub fn score_pair<R: AsRef<[f64]>>(rows: &[R], theta_table: &[f64]) -> Result<ScorePair> {
    let mean = mean_rows(rows);
    if mean.len() != theta_table.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_table.len(),
            got: mean.len(),
        });
    }
    Ok(ScorePair {
        theta_set: top_two_ratio(&mean)?,
        theta_class: theta_table[argmax(&mean)],
    })
}

/// Splits each class into disjoint shuffled sets of size `s` (remainder
/// dropped) and scores every set. Returns `(novel pairs, known pairs)`.
pub fn build_training_pairs(
    known: &[ClassConfidences],
    novel: &[ClassConfidences],
    theta_table: &[f64],
    set_size: usize,
    seed: u64,
) -> Result<(Vec<ScorePair>, Vec<ScorePair>)> {
    if set_size == 0 {
        return Err(Error::invalid("set size must be positive"));
    }
    let pairs = |groups: &[ClassConfidences]| -> Result<Vec<ScorePair>> {
        let mut out = Vec::new();
        for group in groups {
            let mut order: Vec<usize> = (0..group.rows.len()).collect();
            order.shuffle(&mut rng_from(seed, &[group.class as u64]));
            for chunk in order.chunks_exact(set_size) {
                let rows: Vec<&[f64]> = chunk.iter().map(|&i| group.rows[i].as_slice()).collect();
                out.push(score_pair(&rows, theta_table)?);
            }
        }
        Ok(out)
    };
    let (psi_novel, psi_known) = (pairs(novel)?, pairs(known)?);
    if psi_novel.is_empty() && psi_known.is_empty() {
        return Err(Error::invalid(format!(
            "no class has {set_size} held-out examples to form a set"
        )));
    }
    Ok((psi_novel, psi_known))
}

/// One ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryNoveltyClassifier {
    pub partition: Partition,
    /// Soft-label model over `partition.known` (output `j` is class
    /// `partition.known[j]`).
    pub model: SoftLabelModel,
    /// Calibration value per presumed-known class, aligned with
    /// `partition.known`.
    pub theta_table: Vec<f64>,
    pub separator: LinearSeparator,
}

impl BinaryNoveltyClassifier {
    pub fn is_eligible(&self, assigned: usize) -> bool {
        self.partition.is_known(assigned)
    }

    /// Features of a set of raw points, given its global assignment.
    pub fn features(&self, points: &[&[f64]], assigned: usize) -> Result<ScorePair> {
        let pos = self.partition.known_position(assigned).ok_or_else(|| {
            Error::invalid(format!(
                "class {assigned} is presumed novel in partition {}",
                self.partition.index
            ))
        })?;
        let rows = self.model.confidence_rows(points.iter().copied())?;
        Ok(ScorePair {
            theta_set: top_two_ratio(&mean_rows(&rows))?,
            theta_class: self.theta_table[pos],
        })
    }
}

/// A member's contribution to one set's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Ineligible,
    Known,
    Novel,
}

/// Per-member votes for one set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrace {
    pub assigned: usize,
    pub votes: Vec<Vote>,
}

impl ScoreTrace {
    pub fn novel_votes(&self) -> usize {
        self.votes.iter().filter(|v| **v == Vote::Novel).count()
    }

    pub fn eligible(&self) -> usize {
        self.votes
            .iter()
            .filter(|v| **v != Vote::Ineligible)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    /// Soft-label model over every training class.
    pub global_model: SoftLabelModel,
    pub classifiers: Vec<BinaryNoveltyClassifier>,
    pub set_size: usize,
}

impl EnsembleModel {
    pub fn len(&self) -> usize {
        self.classifiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classifiers.is_empty()
    }

    /// The first `count` members. Partitions are prefix-stable, so this is the
    /// ensemble that training with `count` partitions would produce.
    pub fn truncated(&self, count: usize) -> Self {
        Self {
            global_model: self.global_model.clone(),
            classifiers: self.classifiers[..count.min(self.len())].to_vec(),
            set_size: self.set_size,
        }
    }

    /// Global assignment of a set of raw points.
    pub fn assign(&self, points: &[&[f64]]) -> Result<usize> {
        if points.is_empty() {
            return Err(Error::invalid("cannot score an empty set"));
        }
        let rows = self.global_model.confidence_rows(points.iter().copied())?;
        Ok(argmax(&mean_rows(&rows)))
    }

    pub fn trace(&self, points: &[&[f64]]) -> Result<ScoreTrace> {
        let assigned = self.assign(points)?;
        let votes = self
            .classifiers
            .iter()
            .map(|h| {
                if !h.is_eligible(assigned) {
                    return Ok(Vote::Ineligible);
                }
                let pair = h.features(points, assigned)?;
                Ok(if h.separator.is_novel(pair) {
                    Vote::Novel
                } else {
                    Vote::Known
                })
            })
            .collect::<Result<_>>()?;
        Ok(ScoreTrace { assigned, votes })
    }

    /// Number of eligible members voting novel.
    pub fn novelty_score(&self, points: &[&[f64]]) -> Result<usize> {
        Ok(self.trace(points)?.novel_votes())
    }

    /// Novel votes divided by eligible members (0 when none is eligible).
    pub fn normalized_novelty_score(&self, points: &[&[f64]]) -> Result<f64> {
        let trace = self.trace(points)?;
        let eligible = trace.eligible();
        Ok(if eligible == 0 {
            0.0
        } else {
            trace.novel_votes() as f64 / eligible as f64
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub num_partitions: usize,
    pub novel_fraction: f64,
    pub set_size: usize,
    pub svm_c: f64,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            num_partitions: 30,
            novel_fraction: 0.1,
            set_size: 1,
            svm_c: 10.0,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

/// The set-size independent part of ensemble training: the global model and
/// every partition's representation. [`PartitionedTraining::finish`] turns it
/// into an ensemble for a given set size.
#[derive(Debug, Clone)]
pub struct PartitionedTraining {
    pub global_model: SoftLabelModel,
    pub representations: Vec<PartitionRepresentation>,
    seed: u64,
}

impl PartitionedTraining {
    pub fn fit(
        multiclass_train: &LabeledDataset,
        binary_train: &LabeledDataset,
        params: &EnsembleParams,
    ) -> Result<Self> {
        params.train.validate()?;
        let partitions = make_partitions(
            multiclass_train.num_classes(),
            params.num_partitions,
            params.novel_fraction,
            derive_seed(params.seed, &[0]),
        )?;
        let global_cfg = TrainConfig {
            seed: derive_seed(params.seed, &[1]),
            ..params.train
        };
        let (global_model, representations) = rayon::join(
            || train_softmax(multiclass_train, &global_cfg).map_err(|e| e.context("global model")),
            || {
                partitions
                    .par_iter()
                    .map(|p| {
                        let cfg = TrainConfig {
                            seed: derive_seed(params.seed, &[2, p.index as u64]),
                            ..params.train
                        };
                        represent_partition(p, multiclass_train, binary_train, &cfg)
                            .map_err(|e| e.context(format!("partition {}", p.index)))
                    })
                    .collect::<Result<Vec<_>>>()
            },
        );
        Ok(Self {
            global_model: global_model?,
            representations: representations?,
            seed: params.seed,
        })
    }

    pub fn finish(&self, set_size: usize, svm_c: f64) -> Result<EnsembleModel> {
        let classifiers = self
            .representations
            .par_iter()
            .map(|rep| {
                let index = rep.partition.index;
                let build = || -> Result<BinaryNoveltyClassifier> {
                    let theta_table = rep.theta_table()?;
                    let seed = derive_seed(self.seed, &[3, index as u64, set_size as u64]);
                    let (psi_novel, psi_known) =
                        build_training_pairs(&rep.known, &rep.novel, &theta_table, set_size, seed)?;
                    let separator = train_linear_svm(&psi_novel, &psi_known, svm_c)?;
                    Ok(BinaryNoveltyClassifier {
                        partition: rep.partition.clone(),
                        model: rep.model.clone(),
                        theta_table,
                        separator,
                    })
                };
                build().map_err(|e| e.context(format!("partition {index}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnsembleModel {
            global_model: self.global_model.clone(),
            classifiers,
            set_size,
        })
    }
}

/// Trains the full ensemble for one set size.
pub fn train_ensemble(
    multiclass_train: &LabeledDataset,
    binary_train: &LabeledDataset,
    params: &EnsembleParams,
) -> Result<EnsembleModel> {
    PartitionedTraining::fit(multiclass_train, binary_train, params)?
        .finish(params.set_size, params.svm_c)
}

#[cfg(test)]
mod tests;
