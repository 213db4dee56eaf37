//! Test-set sampling, ROC analysis and the class-held-out cross-validation
//! driver.

mod cv;
mod roc;
mod sets;

pub use self::cv::{
    fold_assignments, run_cross_validation, run_single_fold, AggregateRow, BaselineParams,
    CvConfig, EvalReport, FoldModels, KernelChoice, Method, ReportRow, Representation, VoteGap,
};
pub use self::roc::{auc, eer, roc_curve, RocCurve, RocPoint, ScoredSet};
pub use self::sets::{sample_test_sets, TestSet};
