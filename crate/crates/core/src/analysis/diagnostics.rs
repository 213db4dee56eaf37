use std::collections::BTreeSet;

use crate::dataset::{ClassIndex, LabeledDataset};
use crate::ensemble::{score_pair, EnsembleModel};
use crate::error::{Error, Result};
use crate::eval::{roc_curve, ScoredSet, TestSet};

/// How a test set relates to one partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Known,
    PresumedNovel,
    TrulyNovel,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Known => "known",
            Category::PresumedNovel => "presumed_novel",
            Category::TrulyNovel => "truly_novel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRow {
    pub theta_set: f64,
    pub theta_class: f64,
    pub category: Category,
}

impl ScatterRow {
    pub const CSV_HEADER: &'static str = "theta_set,theta_class,category";

    pub fn to_csv(&self) -> String {
        format!(
            "{:?},{:?},{}",
            self.theta_set,
            self.theta_class,
            self.category.as_str()
        )
    }
}

/// Empirical checks of the assumptions behind the vote-count score, taken
/// for one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// AUC of `−θ_S` separating presumed-known from truly novel sets.
    pub r1_auc: f64,
    /// Two-sample KS statistic between `θ_S` on presumed-novel and on truly
    /// novel sets.
    pub r2_ks: f64,
    /// Fraction of truly novel sets the member calls novel.
    pub p_rate: f64,
    /// Fraction of presumed-known sets the member calls novel.
    pub q_rate: f64,
    /// Mean ensemble vote count on truly novel sets.
    pub mu_novel: f64,
    /// Mean ensemble vote count on sets of training classes.
    pub mu_known: f64,
    pub scatter: Vec<ScatterRow>,
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS statistic needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("KS sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs();
        best = best.max(gap);
    }
    Ok(best)
}

/// Scores `sets` with member `member` of `ensemble` and with the full vote.
///
/// `training_classes` is the class index the ensemble was trained with;
/// sets whose class name is in `novel_names` are truly novel.
pub fn requirement_diagnostics(
    ensemble: &EnsembleModel,
    member: usize,
    training_classes: &ClassIndex,
    test: &LabeledDataset,
    sets: &[TestSet],
    novel_names: &BTreeSet<String>,
) -> Result<Diagnostics> {
    let h = ensemble
        .classifiers
        .get(member)
        .ok_or_else(|| Error::invalid(format!("ensemble has no member {member}")))?;
    let mut scatter = Vec::with_capacity(sets.len());
    let (mut novel_votes, mut known_votes) = (Vec::new(), Vec::new());
    for set in sets {
        let name = test.classes().name(set.class);
        let category = if novel_names.contains(name) {
            Category::TrulyNovel
        } else {
            let class = training_classes.index_of(name).ok_or_else(|| {
                Error::invalid(format!("test class {name} is neither novel nor trained"))
            })?;
            if h.partition.is_novel(class) {
                Category::PresumedNovel
            } else {
                Category::Known
            }
        };
        let points = set.points(test);
        let rows = h.model.confidence_rows(points.iter().copied())?;
        let pair = score_pair(&rows, &h.theta_table)?;
        scatter.push(ScatterRow {
            theta_set: pair.theta_set,
            theta_class: pair.theta_class,
            category,
        });
        let votes = ensemble.novelty_score(&points)? as f64;
        if category == Category::TrulyNovel {
            novel_votes.push(votes);
        } else {
            known_votes.push(votes);
        }
    }
    let of = |cat: Category| -> Vec<ScatterRow> {
        scatter
            .iter()
            .copied()
            .filter(|r| r.category == cat)
            .collect()
    };
    let (known, presumed, truly) = (
        of(Category::Known),
        of(Category::PresumedNovel),
        of(Category::TrulyNovel),
    );
    for (rows, cat) in [
        (&known, Category::Known),
        (&presumed, Category::PresumedNovel),
        (&truly, Category::TrulyNovel),
    ] {
        if rows.is_empty() {
            return Err(Error::invalid(format!("no {} test sets", cat.as_str())));
        }
    }
    let scored: Vec<ScoredSet> = known
        .iter()
        .map(|r| ScoredSet {
            score: -r.theta_set,
            is_novel: false,
        })
        .chain(truly.iter().map(|r| ScoredSet {
            score: -r.theta_set,
            is_novel: true,
        }))
        .collect();
    let r1_auc = roc_curve(&scored)?.auc();
    let thetas = |rows: &[ScatterRow]| rows.iter().map(|r| r.theta_set).collect::<Vec<_>>();
    let r2_ks = ks_statistic(&thetas(&presumed), &thetas(&truly))?;
    let novel_rate = |rows: &[ScatterRow]| {
        let hits = rows
            .iter()
            .filter(|r| {
                h.separator.is_novel(crate::ensemble::ScorePair {
                    theta_set: r.theta_set,
                    theta_class: r.theta_class,
                })
            })
            .count();
        hits as f64 / rows.len() as f64
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(Diagnostics {
        r1_auc,
        r2_ks,
        p_rate: novel_rate(&truly),
        q_rate: novel_rate(&known),
        mu_novel: mean(&novel_votes),
        mu_known: mean(&known_votes),
        scatter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ks_identical_samples() {
        let a = [0.3, 1.0, 2.0, 2.0, 5.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn ks_hand_example() {
        // F_a jumps at 1 and 3, F_b at 2 and 4: the gap peaks at 1/2.
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn ks_rejects_empty() {
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn ks_matches_brute_force(
            a in prop::collection::vec(0i32..8, 1..20),
            b in prop::collection::vec(0i32..8, 1..20),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ks = ks_statistic(&a, &b).unwrap();
            prop_assert!((ks - brute_ks(&a, &b)).abs() < 1e-12);
            prop_assert!((ks_statistic(&b, &a).unwrap() - ks).abs() < 1e-12);
        }
    }
}
