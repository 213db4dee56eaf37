use super::*;
use crate::dataset::{generate_synthetic, split_per_class, ClassIndex, SplitSpec, SynthSpec};
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn constant_model(names: &[String], conf: &[f64]) -> SoftLabelModel {
    let classes = ClassIndex::from_names(names.iter().cloned()).unwrap();
    SoftLabelModel::new(
        vec![0.0; conf.len()],
        conf.iter().map(|c| c.ln()).collect(),
        1,
        classes,
    )
    .unwrap()
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// A member whose rule always answers `novel` (or always `known`).
fn fixed_member(
    index: usize,
    known: Vec<usize>,
    novel: Vec<usize>,
    says_novel: bool,
) -> BinaryNoveltyClassifier {
    let partition = Partition::new(index, known, novel).unwrap();
    let k = partition.known.len();
    let member_names: Vec<String> = partition.known.iter().map(|c| format!("c{c}")).collect();
    let mut conf = vec![0.5 / (k - 1) as f64; k];
    conf[0] = 0.5;
    BinaryNoveltyClassifier {
        model: constant_model(&member_names, &conf),
        theta_table: vec![3.0; k],
        separator: LinearSeparator {
            w: [0.0, 0.0],
            b: if says_novel { 1.0 } else { -1.0 },
            standardizer: Standardizer {
                mean: [0.0, 0.0],
                std: [1.0, 1.0],
            },
        },
        partition,
    }
}

/// Global model over 5 classes that always assigns class 0.
fn global() -> SoftLabelModel {
    constant_model(&names(5), &[0.6, 0.1, 0.1, 0.1, 0.1])
}

#[test]
fn no_eligible_member_scores_zero() {
    let ensemble = EnsembleModel {
        global_model: global(),
        classifiers: (0..3)
            .map(|l| fixed_member(l, vec![1, 2, 3, 4], vec![0], true))
            .collect(),
        set_size: 1,
    };
    let x: &[f64] = &[0.3];
    let trace = ensemble.trace(&[x]).unwrap();
    assert_eq!(trace.assigned, 0);
    assert!(trace.votes.iter().all(|v| *v == Vote::Ineligible));
    assert_eq!(ensemble.novelty_score(&[x]).unwrap(), 0);
    assert_eq!(ensemble.normalized_novelty_score(&[x]).unwrap(), 0.0);
}

#[test]
fn unanimous_novel_vote_scores_l() {
    let ensemble = EnsembleModel {
        global_model: global(),
        classifiers: (0..4)
            .map(|l| fixed_member(l, vec![0, 1, 2, 3], vec![4], true))
            .collect(),
        set_size: 1,
    };
    let x: &[f64] = &[1.0];
    assert_eq!(ensemble.novelty_score(&[x, x]).unwrap(), 4);
    assert_eq!(ensemble.normalized_novelty_score(&[x]).unwrap(), 1.0);
}

#[test]
fn mixed_eligibility_and_votes() {
    // members 1 and 3 treat the assigned class 0 as novel
    let classifiers = vec![
        fixed_member(0, vec![0, 1, 2, 3], vec![4], true),
        fixed_member(1, vec![1, 2, 3, 4], vec![0], true),
        fixed_member(2, vec![0, 2, 3, 4], vec![1], false),
        fixed_member(3, vec![1, 2, 3, 4], vec![0], false),
        fixed_member(4, vec![0, 1, 3, 4], vec![2], true),
    ];
    let ensemble = EnsembleModel {
        global_model: global(),
        classifiers,
        set_size: 1,
    };
    let x: &[f64] = &[0.0];
    let trace = ensemble.trace(&[x]).unwrap();
    assert_eq!(
        trace.votes,
        vec![
            Vote::Novel,
            Vote::Ineligible,
            Vote::Known,
            Vote::Ineligible,
            Vote::Novel
        ]
    );
    assert_eq!(trace.eligible(), 3);
    assert_eq!(ensemble.novelty_score(&[x]).unwrap(), 2);
    assert!((ensemble.normalized_novelty_score(&[x]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(ensemble.truncated(2).novelty_score(&[x]).unwrap(), 1);
}

#[test]
fn scoring_rejects_bad_input() {
    let ensemble = EnsembleModel {
        global_model: global(),
        classifiers: vec![fixed_member(0, vec![0, 1, 2, 3], vec![4], true)],
        set_size: 1,
    };
    assert!(ensemble.novelty_score(&[]).is_err());
    let wide: &[f64] = &[1.0, 2.0];
    assert!(matches!(
        ensemble.novelty_score(&[wide]),
        Err(Error::DimensionMismatch { .. })
    ));
}

fn group(class: usize, n: usize, conf: &[f64]) -> ClassConfidences {
    ClassConfidences {
        class,
        rows: vec![conf.to_vec(); n],
    }
}

#[test]
fn pairs_use_disjoint_sets_and_drop_remainders() {
    let known = vec![
        group(0, 10, &[0.8, 0.1, 0.1]),
        group(1, 7, &[0.1, 0.8, 0.1]),
    ];
    let novel = vec![group(5, 4, &[0.4, 0.3, 0.3])];
    let table = [8.0, 7.0, 6.0];
    let (psi_n, psi_k) = build_training_pairs(&known, &novel, &table, 3, 1).unwrap();
    assert_eq!(psi_k.len(), 3 + 2);
    assert_eq!(psi_n.len(), 1);
    let (psi_n, psi_k) = build_training_pairs(&known, &novel, &table, 1, 1).unwrap();
    assert_eq!((psi_n.len(), psi_k.len()), (4, 17));
    assert!(build_training_pairs(&known, &novel, &table, 11, 1).is_err());
}

#[test]
fn confidently_misassigned_novel_set_becomes_a_positive_pair() {
    let novel = vec![group(7, 1, &[0.48, 0.40, 0.12])];
    let known = vec![group(0, 1, &[0.9, 0.05, 0.05])];
    let table = [6.0, 2.0, 2.0];
    let (psi_n, _) = build_training_pairs(&known, &novel, &table, 1, 0).unwrap();
    assert!((psi_n[0].theta_set - 1.2).abs() < 1e-12);
    assert_eq!(psi_n[0].theta_class, 6.0);
}

#[test]
fn fig2_like_data_gives_negative_theta_set_weight() {
    // Novel sets sit near θ_S = 1 for every class calibration value; known
    // sets scale with it.
    let mut rng = crate::rng::rng_from(2, &[]);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut novel = Vec::new();
    let mut known = Vec::new();
    for _ in 0..60 {
        let theta_class = rng.random_range(2.0..20.0);
        novel.push(ScorePair {
            theta_set: 1.0 + f64::abs(noise.sample(&mut rng)),
            theta_class,
        });
    }
    for _ in 0..400 {
        let theta_class: f64 = rng.random_range(2.0..20.0);
        known.push(ScorePair {
            theta_set: 1.0 + theta_class * rng.random_range(0.3..1.5),
            theta_class,
        });
    }
    let sep = train_linear_svm(&novel, &known, 10.0).unwrap();
    assert!(sep.w[0] < 0.0, "w = {:?}", sep.w);
    let correct = novel.iter().filter(|p| sep.is_novel(**p)).count()
        + known.iter().filter(|p| !sep.is_novel(**p)).count();
    assert!(correct as f64 / 460.0 > 0.8);
}

fn benchmark_parts() -> (LabeledDataset, LabeledDataset, LabeledDataset) {
    let ds = generate_synthetic(&SynthSpec {
        num_classes: 8,
        dim: 6,
        examples_per_class: 40,
        center_spread: 1.0,
        within_std: 0.6,
        seed: 21,
    })
    .unwrap();
    split_per_class(
        &ds,
        &SplitSpec {
            multiclass_fraction: 0.6,
            binary_fraction: 0.25,
            seed: 3,
        },
    )
    .unwrap()
}

fn small_params() -> EnsembleParams {
    EnsembleParams {
        num_partitions: 6,
        novel_fraction: 0.15,
        set_size: 1,
        svm_c: 10.0,
        train: TrainConfig {
            max_epochs: 150,
            ..TrainConfig::default()
        },
        seed: 5,
    }
}

#[test]
fn represent_partition_dimensions_and_r1_direction() {
    let (multi, binary, _) = benchmark_parts();
    let partition = Partition::new(0, vec![0, 1, 2, 3, 4], vec![5, 6]).unwrap();
    let rep = represent_partition(&partition, &multi, &binary, &TrainConfig::default()).unwrap();
    assert_eq!(rep.model.num_classes(), 5);
    for g in rep.known.iter().chain(&rep.novel) {
        assert!(g.rows.iter().all(|r| r.len() == 5));
    }
    let mean_theta = |groups: &[ClassConfidences]| {
        let thetas: Vec<f64> = groups
            .iter()
            .flat_map(|g| g.rows.iter().map(|r| top_two_ratio(r).unwrap()))
            .collect();
        thetas.iter().sum::<f64>() / thetas.len() as f64
    };
    assert!(mean_theta(&rep.known) > mean_theta(&rep.novel));
}

#[test]
fn represent_partition_requires_shared_class_index() {
    let (multi, binary, _) = benchmark_parts();
    let partition = Partition::new(0, vec![0, 1, 2], vec![3]).unwrap();
    let other = binary.restrict_to_classes(&[0, 1, 2, 3]).unwrap();
    assert!(represent_partition(&partition, &multi, &other, &TrainConfig::default()).is_err());
}

#[test]
fn trained_ensemble_structure_and_determinism() {
    let (multi, binary, test) = benchmark_parts();
    let params = small_params();
    let ensemble = train_ensemble(&multi, &binary, &params).unwrap();
    assert_eq!(ensemble.len(), 6);
    assert_eq!(ensemble.global_model.num_classes(), 8);

    let mut counts = [0usize; 8];
    for h in &ensemble.classifiers {
        for &c in &h.partition.novel {
            counts[c] += 1;
        }
        assert_eq!(h.theta_table.len(), h.partition.known.len());
    }
    assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);

    for i in 0..test.len() {
        let x = test.row(i);
        let trace = ensemble.trace(&[x]).unwrap();
        for (h, vote) in ensemble.classifiers.iter().zip(&trace.votes) {
            if h.partition.is_novel(trace.assigned) {
                assert_eq!(*vote, Vote::Ineligible);
            }
        }
        assert!(trace.novel_votes() <= trace.eligible());
    }

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    ensemble.save_dir(dir_a.path()).unwrap();
    train_ensemble(&multi, &binary, &params)
        .unwrap()
        .save_dir(dir_b.path())
        .unwrap();
    for entry in std::fs::read_dir(dir_a.path()).unwrap() {
        let entry = entry.unwrap();
        let a = std::fs::read(entry.path()).unwrap();
        let b = std::fs::read(dir_b.path().join(entry.file_name())).unwrap();
        assert_eq!(a, b, "{:?} differs", entry.file_name());
    }

    let loaded = EnsembleModel::load_dir(dir_a.path()).unwrap();
    assert_eq!(loaded, ensemble);
}

#[test]
fn truncation_matches_training_fewer_partitions() {
    let (multi, binary, test) = benchmark_parts();
    let full = train_ensemble(&multi, &binary, &small_params()).unwrap();
    let short = train_ensemble(
        &multi,
        &binary,
        &EnsembleParams {
            num_partitions: 3,
            ..small_params()
        },
    )
    .unwrap();
    assert_eq!(full.truncated(3), short);
    let x = test.row(0);
    assert_eq!(
        full.truncated(3).novelty_score(&[x]).unwrap(),
        short.novelty_score(&[x]).unwrap()
    );
}
