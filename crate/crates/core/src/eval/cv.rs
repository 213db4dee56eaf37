use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::roc::{roc_curve, RocCurve, ScoredSet};
use super::sets::{sample_test_sets, TestSet};
use crate::analysis::{requirement_diagnostics, Diagnostics};
use crate::baselines::{
    knfst_train, max_confidence_score, median_heuristic_gamma, ocsvm_train, simple_threshold_score,
    Kernel, KnnIndex,
};
use crate::dataset::{fit_pca, split_per_class, LabeledDataset, SplitSpec};
use crate::ensemble::{EnsembleModel, EnsembleParams, PartitionedTraining, Vote};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::softlabel::{train_softmax, SoftLabelModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ensemble,
    Threshold,
    MaxConfidence,
    Knn,
    Ocsvm,
    Knfst,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ensemble,
        Method::Threshold,
        Method::MaxConfidence,
        Method::Knn,
        Method::Ocsvm,
        Method::Knfst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ensemble => "ensemble",
            Method::Threshold => "threshold",
            Method::MaxConfidence => "max_confidence",
            Method::Knn => "knn",
            Method::Ocsvm => "ocsvm",
            Method::Knfst => "knfst",
        }
    }

    /// Whether the method scores raw features through a configurable
    /// representation.
    pub fn uses_representation(self) -> bool {
        matches!(self, Method::Knn | Method::Ocsvm | Method::Knfst)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Feature space a baseline is trained and scored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Confidence vectors of the global soft-label model.
    Confidence,
    Original,
    /// Top principal components of the training features.
    Pca(usize),
}

impl Representation {
    /// Form usable in file names.
    pub fn file_tag(self) -> String {
        match self {
            Representation::Pca(m) => format!("pca{m}"),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Confidence => f.write_str("confidence"),
            Representation::Original => f.write_str("original"),
            Representation::Pca(m) => write!(f, "pca:{m}"),
        }
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confidence" => Ok(Representation::Confidence),
            "original" => Ok(Representation::Original),
            _ => {
                let m = s
                    .strip_prefix("pca:")
                    .and_then(|m| m.parse::<usize>().ok())
                    .filter(|&m| m > 0)
                    .ok_or_else(|| Error::invalid(format!("unknown representation `{s}`")))?;
                Ok(Representation::Pca(m))
            }
        }
    }
}

/// Kernel for KNFST; an RBF width of `None` uses the median heuristic on
/// the training points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear,
    Rbf { gamma: Option<f64> },
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelChoice {
    fn resolve(self, points: &[&[f64]]) -> Result<Kernel> {
        Ok(match self {
            KernelChoice::Linear => Kernel::Linear,
            KernelChoice::Rbf { gamma: Some(gamma) } => Kernel::Rbf { gamma },
            KernelChoice::Rbf { gamma: None } => Kernel::Rbf {
                gamma: median_heuristic_gamma(points)?,
            },
            KernelChoice::Polynomial { degree, coef0 } => Kernel::Polynomial { degree, coef0 },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub knn_k: Vec<usize>,
    pub ocsvm_nu: f64,
    /// `None` uses the median heuristic.
    pub ocsvm_gamma: Option<f64>,
    pub knfst_kernel: KernelChoice,
    /// Larger training sets are subsampled per class down to this size.
    pub knfst_max_points: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            knn_k: vec![1, 2, 5],
            ocsvm_nu: 0.1,
            ocsvm_gamma: None,
            knfst_kernel: KernelChoice::Rbf { gamma: None },
            knfst_max_points: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub set_sizes: Vec<usize>,
    pub multiclass_fraction: f64,
    pub binary_fraction: f64,
    pub methods: Vec<Method>,
    /// `seed` and `set_size` are ignored; both are set per fold.
    pub ensemble: EnsembleParams,
    /// Smaller ensembles to report alongside the full one, as prefixes of it.
    pub sub_sizes: Vec<usize>,
    /// Score with the vote fraction of eligible members instead of the count.
    pub normalized: bool,
    pub baselines: BaselineParams,
    pub representations: Vec<Representation>,
    pub seed: u64,
    pub keep_curves: bool,
    pub keep_models: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            repeats: 3,
            set_sizes: vec![1, 5],
            multiclass_fraction: 0.6,
            binary_fraction: 0.1,
            methods: Method::ALL.to_vec(),
            ensemble: EnsembleParams::default(),
            sub_sizes: vec![5],
            normalized: false,
            baselines: BaselineParams::default(),
            representations: vec![Representation::Confidence, Representation::Original],
            seed: 0,
            keep_curves: true,
            keep_models: false,
        }
    }
}

impl CvConfig {
    pub fn validate(&self, num_classes: usize, dim: usize) -> Result<()> {
        if self.folds < 2 || self.folds > num_classes {
            return Err(Error::invalid(format!(
                "folds must lie in 2..={num_classes} for {num_classes} classes"
            )));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be positive"));
        }
        if self.set_sizes.is_empty() || self.set_sizes.contains(&0) {
            return Err(Error::invalid(
                "set sizes must be a non-empty list of positive integers",
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method must be enabled"));
        }
        SplitSpec {
            multiclass_fraction: self.multiclass_fraction,
            binary_fraction: self.binary_fraction,
            seed: self.seed,
        }
        .validate()?;
        self.ensemble.train.validate()?;
        let known = num_classes - num_classes.div_ceil(self.folds);
        if known < 2 {
            return Err(Error::invalid(
                "every fold must leave at least 2 training classes",
            ));
        }
        if self.methods.contains(&Method::Ensemble) {
            let p = &self.ensemble;
            if p.num_partitions == 0 {
                return Err(Error::invalid("ensemble needs at least one partition"));
            }
            if !(p.novel_fraction > 0.0 && p.novel_fraction < 1.0) {
                return Err(Error::invalid("novel_fraction must lie in (0, 1)"));
            }
            if !(p.svm_c > 0.0 && p.svm_c.is_finite()) {
                return Err(Error::invalid("svm_c must be positive"));
            }
            let m = crate::ensemble::novel_count(known, p.novel_fraction);
            if m + 2 > known {
                return Err(Error::invalid(format!(
                    "{known} training classes cannot hold {m} presumed-novel and 2 presumed-known classes"
                )));
            }
            if let Some(&bad) = self
                .sub_sizes
                .iter()
                .find(|&&l| l == 0 || l > p.num_partitions)
            {
                return Err(Error::invalid(format!(
                    "ensemble sub-size {bad} must lie in 1..={}",
                    p.num_partitions
                )));
            }
        }
        if self.methods.iter().any(|m| m.uses_representation()) {
            if self.representations.is_empty() {
                return Err(Error::invalid("baselines need at least one representation"));
            }
            for r in &self.representations {
                if let Representation::Pca(m) = r {
                    if *m > dim {
                        return Err(Error::invalid(format!(
                            "PCA dimension {m} exceeds the feature dimension {dim}"
                        )));
                    }
                }
            }
        }
        let b = &self.baselines;
        if self.methods.contains(&Method::Knn) && (b.knn_k.is_empty() || b.knn_k.contains(&0)) {
            return Err(Error::invalid("knn needs a non-empty list of positive k"));
        }
        if self.methods.contains(&Method::Ocsvm) {
            if !(b.ocsvm_nu > 0.0 && b.ocsvm_nu <= 1.0) {
                return Err(Error::invalid("ocsvm nu must lie in (0, 1]"));
            }
            if let Some(g) = b.ocsvm_gamma {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::invalid("ocsvm gamma must be positive"));
                }
            }
        }
        if self.methods.contains(&Method::Knfst) {
            if b.knfst_max_points < 2 {
                return Err(Error::invalid("knfst_max_points must be at least 2"));
            }
            let kernel = match b.knfst_kernel {
                KernelChoice::Rbf { gamma: None } => Kernel::Rbf { gamma: 1.0 },
                other => other.resolve(&[])?,
            };
            kernel.validate()?;
        }
        Ok(())
    }
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub representation: String,
    pub set_size: usize,
    pub fold: usize,
    pub repeat: usize,
    pub auc: f64,
    pub eer: f64,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str = "method,representation,s,fold,repeat,auc,eer";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.representation,
            self.set_size,
            self.fold,
            self.repeat,
            self.auc,
            self.eer
        )
    }

    /// File name of this row's ROC curve, unique within a repeat.
    pub fn roc_file_name(&self) -> String {
        let method = if self.representation == "confidence" && !self.is_baseline() {
            self.method.clone()
        } else {
            format!("{}-{}", self.method, self.representation.replace(':', ""))
        };
        format!("roc_{}_{}_{}.csv", method, self.set_size, self.fold)
    }

    fn is_baseline(&self) -> bool {
        ["knn", "ocsvm", "knfst"]
            .iter()
            .any(|b| self.method.starts_with(b))
    }
}

/// Mean ± sample standard deviation over folds and repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub representation: String,
    pub set_size: usize,
    pub count: usize,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub eer_mean: f64,
    pub eer_std: f64,
}

/// Mean ensemble vote count on truly novel and on known test sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteGap {
    pub repeat: usize,
    pub fold: usize,
    pub set_size: usize,
    pub mu_novel: f64,
    pub mu_known: f64,
}

impl VoteGap {
    pub const CSV_HEADER: &'static str = "repeat,fold,s,mu_novel,mu_known,gap";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.repeat,
            self.fold,
            self.set_size,
            self.mu_novel,
            self.mu_known,
            self.mu_novel - self.mu_known
        )
    }
}

/// Trained ensembles of one fold, one per set size.
#[derive(Debug, Clone)]
pub struct FoldModels {
    pub repeat: usize,
    pub fold: usize,
    pub ensembles: Vec<EnsembleModel>,
}

#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// Aligned with `rows` when curves are kept, empty otherwise.
    pub curves: Vec<RocCurve>,
    pub vote_gaps: Vec<VoteGap>,
    /// First ensemble member of repeat 0, fold 0, at the smallest set size.
    pub diagnostics: Option<Diagnostics>,
    pub models: Vec<FoldModels>,
}

impl EvalReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(ReportRow::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn vote_gap_csv(&self) -> String {
        let mut out = String::from(VoteGap::CSV_HEADER);
        out.push('\n');
        for gap in &self.vote_gaps {
            out.push_str(&gap.to_csv());
            out.push('\n');
        }
        out
    }

    /// Groups rows by (method, representation, s) in first-appearance order.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(&str, &str, usize)> = Vec::new();
        for row in &self.rows {
            let key = (
                row.method.as_str(),
                row.representation.as_str(),
                row.set_size,
            );
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(method, representation, set_size)| {
                let group: Vec<&ReportRow> = self
                    .rows
                    .iter()
                    .filter(|r| {
                        r.method == method
                            && r.representation == representation
                            && r.set_size == set_size
                    })
                    .collect();
                let aucs: Vec<f64> = group.iter().map(|r| r.auc).collect();
                let eers: Vec<f64> = group.iter().map(|r| r.eer).collect();
                let (auc_mean, auc_std) = mean_std(&aucs);
                let (eer_mean, eer_std) = mean_std(&eers);
                AggregateRow {
                    method: method.to_string(),
                    representation: representation.to_string(),
                    set_size,
                    count: group.len(),
                    auc_mean,
                    auc_std,
                    eer_mean,
                    eer_std,
                }
            })
            .collect()
    }

    /// Fixed-width table of the aggregate, for terminals.
    pub fn aggregate_table(&self) -> String {
        let mut out = format!(
            "{:<18} {:<14} {:>3} {:>16} {:>16}\n",
            "method", "representation", "s", "AUC", "EER"
        );
        for a in self.aggregate() {
            out.push_str(&format!(
                "{:<18} {:<14} {:>3} {:>9.3} ± {:.3} {:>9.3} ± {:.3}\n",
                a.method,
                a.representation,
                a.set_size,
                a.auc_mean,
                a.auc_std,
                a.eer_mean,
                a.eer_std
            ));
        }
        out
    }

    pub fn mean_auc(&self, method: &str, set_size: usize) -> Option<f64> {
        let aucs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.set_size == set_size)
            .map(|r| r.auc)
            .collect();
        (!aucs.is_empty()).then(|| mean_std(&aucs).0)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Held-out classes of every fold for one repeat: a seeded permutation cut
/// into `folds` chunks whose sizes differ by at most one.
pub fn fold_assignments(
    num_classes: usize,
    folds: usize,
    seed: u64,
    repeat: usize,
) -> Result<Vec<Vec<usize>>> {
    if folds == 0 || folds > num_classes {
        return Err(Error::invalid(format!(
            "cannot cut {num_classes} classes into {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..num_classes).collect();
    order.shuffle(&mut rng_from(seed, &[10, repeat as u64]));
    let (base, extra) = (num_classes / folds, num_classes % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut fold = order[start..start + size].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += size;
    }
    Ok(out)
}

struct FoldOutcome {
    rows: Vec<ReportRow>,
    curves: Vec<RocCurve>,
    vote_gaps: Vec<VoteGap>,
    diagnostics: Option<Diagnostics>,
    models: Option<FoldModels>,
}

/// Scores for every configured set size, in `cfg.set_sizes` order.
struct MethodScores {
    method: String,
    representation: String,
    scores: Vec<Vec<f64>>,
}

/// Runs every fold of every repeat and collects rows in (repeat, fold,
/// method, s) order. Folds run in parallel on the current rayon pool.
pub fn run_cross_validation(data: &LabeledDataset, cfg: &CvConfig) -> Result<EvalReport> {
    cfg.validate(data.num_classes(), data.dim())?;
    let mut jobs = Vec::new();
    for repeat in 0..cfg.repeats {
        for (fold, novel) in fold_assignments(data.num_classes(), cfg.folds, cfg.seed, repeat)?
            .into_iter()
            .enumerate()
        {
            jobs.push((repeat, fold, novel));
        }
    }
    let outcomes = jobs
        .par_iter()
        .map(|(repeat, fold, novel)| {
            log::info!(
                "repeat {repeat} fold {fold}: holding out {} classes",
                novel.len()
            );
            run_fold(data, cfg, *repeat, *fold, novel, *repeat == 0 && *fold == 0)
                .map_err(|e| e.context(format!("repeat {repeat}, fold {fold}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = EvalReport::default();
    for outcome in outcomes {
        report.rows.extend(outcome.rows);
        report.curves.extend(outcome.curves);
        report.vote_gaps.extend(outcome.vote_gaps);
        if report.diagnostics.is_none() {
            report.diagnostics = outcome.diagnostics;
        }
        report.models.extend(outcome.models);
    }
    Ok(report)
}

/// Runs one fold of one repeat on its own.
pub fn run_single_fold(
    data: &LabeledDataset,
    cfg: &CvConfig,
    repeat: usize,
    fold: usize,
) -> Result<EvalReport> {
    cfg.validate(data.num_classes(), data.dim())?;
    let assignment = fold_assignments(data.num_classes(), cfg.folds, cfg.seed, repeat)?;
    let novel = assignment.get(fold).ok_or_else(|| {
        Error::invalid(format!("fold {fold} out of range for {} folds", cfg.folds))
    })?;
    let outcome = run_fold(data, cfg, repeat, fold, novel, true)
        .map_err(|e| e.context(format!("repeat {repeat}, fold {fold}")))?;
    Ok(EvalReport {
        rows: outcome.rows,
        curves: outcome.curves,
        vote_gaps: outcome.vote_gaps,
        diagnostics: outcome.diagnostics,
        models: outcome.models.into_iter().collect(),
    })
}

fn run_fold(
    data: &LabeledDataset,
    cfg: &CvConfig,
    repeat: usize,
    fold: usize,
    novel: &[usize],
    diagnose: bool,
) -> Result<FoldOutcome> {
    let (r, f) = (repeat as u64, fold as u64);
    let split = SplitSpec {
        multiclass_fraction: cfg.multiclass_fraction,
        binary_fraction: cfg.binary_fraction,
        seed: derive_seed(cfg.seed, &[11, r, f]),
    };
    let (multi_all, binary_all, test) = split_per_class(data, &split)?;
    let known: Vec<usize> = (0..data.num_classes())
        .filter(|c| !novel.contains(c))
        .collect();
    let multi = multi_all.restrict_to_classes(&known)?;
    let binary = binary_all.restrict_to_classes(&known)?;
    let novel_names: BTreeSet<String> = novel
        .iter()
        .map(|&c| data.classes().name(c).to_string())
        .collect();

    let test_sets = cfg
        .set_sizes
        .iter()
        .map(|&s| {
            sample_test_sets(
                &test,
                &novel_names,
                s,
                derive_seed(cfg.seed, &[12, r, f, s as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    for (sets, &s) in test_sets.iter().zip(&cfg.set_sizes) {
        if !sets.iter().any(|t| t.is_novel) || sets.iter().all(|t| t.is_novel) {
            return Err(Error::invalid(format!(
                "set size {s} leaves only one kind of test set"
            )));
        }
    }

    let ensemble_params = EnsembleParams {
        seed: derive_seed(cfg.seed, &[13, r, f]),
        ..cfg.ensemble
    };
    let wants = |m: Method| cfg.methods.contains(&m);
    let needs_global = wants(Method::Threshold)
        || wants(Method::MaxConfidence)
        || (cfg.methods.iter().any(|m| m.uses_representation())
            && cfg.representations.contains(&Representation::Confidence));
    let training = if wants(Method::Ensemble) {
        Some(
            PartitionedTraining::fit(&multi, &binary, &ensemble_params)
                .map_err(|e| e.context("ensemble"))?,
        )
    } else {
        None
    };
    let global = match &training {
        Some(t) => Some(t.global_model.clone()),
        None if needs_global => {
            let cfg = TrainConfig {
                seed: derive_seed(ensemble_params.seed, &[1]),
                ..ensemble_params.train
            };
            Some(train_softmax(&multi, &cfg).map_err(|e| e.context("global model"))?)
        }
        None => None,
    };

    let mut outcome = FoldOutcome {
        rows: Vec::new(),
        curves: Vec::new(),
        vote_gaps: Vec::new(),
        diagnostics: None,
        models: None,
    };
    let mut all_scores: Vec<MethodScores> = Vec::new();
    for &method in &cfg.methods {
        let scored = match method {
            Method::Ensemble => {
                let training = training.as_ref().expect("ensemble trained above");
                ensemble_scores(
                    cfg,
                    training,
                    &multi,
                    &test,
                    &test_sets,
                    &novel_names,
                    (repeat, fold, diagnose),
                    &mut outcome,
                )
            }
            Method::Threshold | Method::MaxConfidence => {
                let model = global.as_ref().expect("global model trained above");
                let score = if method == Method::Threshold {
                    simple_threshold_score
                } else {
                    max_confidence_score
                };
                let scores = score_all(&test, &test_sets, |pts| score(model, pts));
                scores.map(|scores| {
                    vec![MethodScores {
                        method: method.name().to_string(),
                        representation: Representation::Confidence.to_string(),
                        scores,
                    }]
                })
            }
            Method::Knn | Method::Ocsvm | Method::Knfst => cfg
                .representations
                .iter()
                .map(|&rep| {
                    baseline_scores(
                        cfg,
                        method,
                        rep,
                        global.as_ref(),
                        &multi,
                        &binary,
                        &test,
                        &test_sets,
                        r,
                        f,
                    )
                    .map_err(|e| e.context(format!("representation {rep}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(|v| v.into_iter().flatten().collect()),
        };
        all_scores.extend(scored.map_err(|e| e.context(format!("method {method}")))?);
    }

    for ms in all_scores {
        for (i, &s) in cfg.set_sizes.iter().enumerate() {
            let scored: Vec<ScoredSet> = ms.scores[i]
                .iter()
                .zip(&test_sets[i])
                .map(|(&score, set)| ScoredSet {
                    score,
                    is_novel: set.is_novel,
                })
                .collect();
            let curve =
                roc_curve(&scored).map_err(|e| e.context(format!("method {}", ms.method)))?;
            outcome.rows.push(ReportRow {
                method: ms.method.clone(),
                representation: ms.representation.clone(),
                set_size: s,
                fold,
                repeat,
                auc: curve.auc(),
                eer: curve.eer(),
            });
            if cfg.keep_curves {
                outcome.curves.push(curve);
            }
        }
    }
    Ok(outcome)
}

fn score_all<F>(
    test: &LabeledDataset,
    test_sets: &[Vec<TestSet>],
    score: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[&[f64]]) -> Result<f64> + Sync,
{
    test_sets
        .iter()
        .map(|sets| {
            sets.par_iter()
                .map(|set| score(&set.points(test)))
                .collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn ensemble_scores(
    cfg: &CvConfig,
    training: &PartitionedTraining,
    multi: &LabeledDataset,
    test: &LabeledDataset,
    test_sets: &[Vec<TestSet>],
    novel_names: &BTreeSet<String>,
    (repeat, fold, diagnose): (usize, usize, bool),
    outcome: &mut FoldOutcome,
) -> Result<Vec<MethodScores>> {
    let full = cfg.ensemble.num_partitions;
    let mut sizes = vec![full];
    sizes.extend(cfg.sub_sizes.iter().copied().filter(|&l| l < full));
    sizes.dedup();
    let mut per_size: Vec<Vec<Vec<f64>>> = vec![Vec::new(); sizes.len()];
    let mut models = Vec::new();
    for (i, &s) in cfg.set_sizes.iter().enumerate() {
        let ensemble = training.finish(s, cfg.ensemble.svm_c)?;
        let traces = test_sets[i]
            .par_iter()
            .map(|set| ensemble.trace(&set.points(test)))
            .collect::<Result<Vec<_>>>()?;
        for (j, &l) in sizes.iter().enumerate() {
            per_size[j].push(
                traces
                    .iter()
                    .map(|t| vote_score(&t.votes[..l], cfg.normalized))
                    .collect(),
            );
        }
        let (mut novel, mut known) = (Vec::new(), Vec::new());
        for (t, set) in traces.iter().zip(&test_sets[i]) {
            let votes = t.novel_votes() as f64;
            if set.is_novel {
                novel.push(votes);
            } else {
                known.push(votes);
            }
        }
        outcome.vote_gaps.push(VoteGap {
            repeat,
            fold,
            set_size: s,
            mu_novel: novel.iter().sum::<f64>() / novel.len() as f64,
            mu_known: known.iter().sum::<f64>() / known.len() as f64,
        });
        let smallest = cfg.set_sizes.iter().min() == Some(&s);
        if diagnose && smallest && outcome.diagnostics.is_none() {
            match requirement_diagnostics(
                &ensemble,
                0,
                multi.classes(),
                test,
                &test_sets[i],
                novel_names,
            ) {
                Ok(d) => outcome.diagnostics = Some(d),
                Err(e) => log::warn!("skipping requirement diagnostics: {e}"),
            }
        }
        if cfg.keep_models {
            models.push(ensemble);
        }
    }
    if cfg.keep_models {
        outcome.models = Some(FoldModels {
            repeat,
            fold,
            ensembles: models,
        });
    }
    Ok(sizes
        .iter()
        .zip(per_size)
        .map(|(&l, scores)| MethodScores {
            method: if l == full {
                "ensemble".to_string()
            } else {
                format!("ensemble_L{l}")
            },
            representation: Representation::Confidence.to_string(),
            scores,
        })
        .collect())
}

fn vote_score(votes: &[Vote], normalized: bool) -> f64 {
    let novel = votes.iter().filter(|v| **v == Vote::Novel).count();
    if !normalized {
        return novel as f64;
    }
    let eligible = votes.iter().filter(|v| **v != Vote::Ineligible).count();
    if eligible == 0 {
        0.0
    } else {
        novel as f64 / eligible as f64
    }
}

#[allow(clippy::too_many_arguments)]
fn baseline_scores(
    cfg: &CvConfig,
    method: Method,
    rep: Representation,
    global: Option<&SoftLabelModel>,
    multi: &LabeledDataset,
    binary: &LabeledDataset,
    test: &LabeledDataset,
    test_sets: &[Vec<TestSet>],
    r: u64,
    f: u64,
) -> Result<Vec<MethodScores>> {
    let train_raw = multi.concat(binary)?;
    let (train, test) = match rep {
        Representation::Original => (train_raw, test.clone()),
        Representation::Confidence => {
            let model = global.expect("global model trained for confidence representation");
            (
                train_raw.map_rows(|x| model.predict_confidences(x))?,
                test.map_rows(|x| model.predict_confidences(x))?,
            )
        }
        Representation::Pca(m) => {
            let pca = fit_pca(&train_raw, m)?;
            (pca.apply(&train_raw)?, pca.apply(test)?)
        }
    };
    let points: Vec<&[f64]> = train.rows().collect();
    let b = &cfg.baselines;
    let entry = |name: String, scores| MethodScores {
        method: name,
        representation: rep.to_string(),
        scores,
    };
    match method {
        Method::Knn => b
            .knn_k
            .iter()
            .map(|&k| {
                let index = KnnIndex::new(&points, k)?;
                Ok(entry(
                    format!("knn_k{k}"),
                    score_all(&test, test_sets, |pts| index.novelty_score(pts))?,
                ))
            })
            .collect(),
        Method::Ocsvm => {
            let gamma = match b.ocsvm_gamma {
                Some(g) => g,
                None => median_heuristic_gamma(&points)?,
            };
            let model = ocsvm_train(&points, b.ocsvm_nu, gamma)?;
            Ok(vec![entry(
                "ocsvm".to_string(),
                score_all(&test, test_sets, |pts| model.novelty_score(pts))?,
            )])
        }
        Method::Knfst => {
            let rows = stratified_cap(
                &train,
                b.knfst_max_points,
                derive_seed(cfg.seed, &[14, r, f]),
            );
            let sub = train.select(&rows)?;
            let sub_points: Vec<&[f64]> = sub.rows().collect();
            let kernel = b.knfst_kernel.resolve(&sub_points)?;
            let model = knfst_train(&sub_points, sub.labels(), kernel, b.knfst_max_points)?;
            Ok(vec![entry(
                "knfst".to_string(),
                score_all(&test, test_sets, |pts| model.novelty_score(pts))?,
            )])
        }
        _ => unreachable!("not a representation-based baseline"),
    }
}

/// Row indices keeping at most `cap` examples in total, spread evenly over
/// classes (each class keeps at least one).
fn stratified_cap(ds: &LabeledDataset, cap: usize, seed: u64) -> Vec<usize> {
    if ds.len() <= cap {
        return (0..ds.len()).collect();
    }
    let per_class = (cap / ds.num_classes()).max(1);
    let mut rows = Vec::new();
    for class in 0..ds.num_classes() {
        let mut idx = ds.indices_of_class(class);
        idx.shuffle(&mut rng_from(seed, &[class as u64]));
        idx.truncate(per_class);
        rows.extend(idx);
    }
    rows.sort_unstable();
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthSpec};

    fn small_data() -> LabeledDataset {
        generate_synthetic(&SynthSpec {
            num_classes: 6,
            dim: 4,
            examples_per_class: 20,
            center_spread: 3.0,
            within_std: 1.0,
            seed: 5,
        })
        .unwrap()
    }

    fn quick_config() -> CvConfig {
        CvConfig {
            folds: 3,
            repeats: 1,
            set_sizes: vec![1, 2],
            methods: vec![
                Method::Ensemble,
                Method::Threshold,
                Method::MaxConfidence,
                Method::Knn,
            ],
            ensemble: EnsembleParams {
                num_partitions: 4,
                novel_fraction: 0.25,
                train: TrainConfig {
                    max_epochs: 60,
                    ..TrainConfig::default()
                },
                ..EnsembleParams::default()
            },
            sub_sizes: vec![2],
            baselines: BaselineParams {
                knn_k: vec![1, 2],
                ..BaselineParams::default()
            },
            ..CvConfig::default()
        }
    }

    #[test]
    fn folds_cover_every_class_once() {
        for (n, folds) in [(20, 10), (10, 3), (7, 7)] {
            let assignment = fold_assignments(n, folds, 42, 1).unwrap();
            assert_eq!(assignment.len(), folds);
            let mut all: Vec<usize> = assignment.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = assignment.iter().map(Vec::len).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert_eq!(*sizes.iter().max().unwrap(), n.div_ceil(folds));
        }
    }

    #[test]
    fn twenty_classes_ten_folds_hold_out_two() {
        let assignment = fold_assignments(20, 10, 0, 0).unwrap();
        assert!(assignment.iter().all(|f| f.len() == 2));
        assert_ne!(assignment, fold_assignments(20, 10, 0, 1).unwrap());
    }

    #[test]
    fn report_has_one_row_per_combination() {
        let report = run_cross_validation(&small_data(), &quick_config()).unwrap();
        // ensemble, ensemble_L2, threshold, max_confidence, knn_k1 and knn_k2
        // on two representations: 8 series, 2 set sizes, 3 folds.
        assert_eq!(report.rows.len(), 8 * 2 * 3);
        assert_eq!(report.curves.len(), report.rows.len());
        assert_eq!(report.vote_gaps.len(), 2 * 3);
        assert!(report.diagnostics.is_some());
        for row in &report.rows {
            assert!((0.0..=1.0).contains(&row.auc));
            assert!((0.0..=1.0).contains(&row.eer));
        }
        let first = &report.rows[..4];
        assert_eq!(first[0].method, "ensemble");
        assert_eq!((first[0].set_size, first[1].set_size), (1, 2));
        assert_eq!(first[2].method, "ensemble_L2");
        let aggregate = report.aggregate();
        assert_eq!(aggregate.len(), 8 * 2);
        assert!(aggregate.iter().all(|a| a.count == 3));
    }

    #[test]
    fn report_is_deterministic() {
        let data = small_data();
        let cfg = CvConfig {
            methods: vec![Method::Ensemble, Method::MaxConfidence],
            ..quick_config()
        };
        let a = run_cross_validation(&data, &cfg).unwrap().summary_csv();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| run_cross_validation(&data, &cfg).unwrap().summary_csv());
        assert_eq!(a, b);
    }

    #[test]
    fn roc_file_names_are_unique() {
        let report = run_cross_validation(&small_data(), &quick_config()).unwrap();
        let names: BTreeSet<String> = report.rows.iter().map(|r| r.roc_file_name()).collect();
        assert_eq!(names.len(), report.rows.len());
        assert!(names.contains("roc_ensemble_1_0.csv"));
        assert!(names.contains("roc_knn_k1-original_2_2.csv"));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let data = small_data();
        let bad = [
            CvConfig {
                folds: 1,
                ..quick_config()
            },
            CvConfig {
                folds: 7,
                ..quick_config()
            },
            CvConfig {
                set_sizes: vec![0],
                ..quick_config()
            },
            CvConfig {
                sub_sizes: vec![9],
                ..quick_config()
            },
            CvConfig {
                representations: vec![Representation::Pca(9)],
                ..quick_config()
            },
        ];
        for cfg in bad {
            assert!(run_cross_validation(&data, &cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn representation_round_trip() {
        for text in ["confidence", "original", "pca:3"] {
            assert_eq!(text.parse::<Representation>().unwrap().to_string(), text);
        }
        assert!("pca:0".parse::<Representation>().is_err());
        assert!("tsne".parse::<Representation>().is_err());
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn stratified_cap_balances_classes() {
        let data = small_data();
        let rows = stratified_cap(&data, 30, 1);
        assert_eq!(rows.len(), 30);
        let sub = data.select(&rows).unwrap();
        assert!(sub.class_counts().iter().all(|&c| c == 5));
    }
}
