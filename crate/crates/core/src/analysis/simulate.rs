use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::rng_from;

const BATCH: usize = 10_000;

/// Per-member vote probabilities.
///
/// `p[l]` is the chance member `l` calls a truly novel input novel, `q[l]` the
/// chance it calls a known input novel. When the known input's class was
/// presumed novel in member `l`'s split (`novel_assignment[l]`), that member
/// behaves as on novel inputs and votes with `p[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRates {
    p: Vec<f64>,
    q: Vec<f64>,
    novel_assignment: Vec<bool>,
}

impl VoteRates {
    pub fn new(p: Vec<f64>, q: Vec<f64>, novel_assignment: Vec<bool>) -> Result<Self> {
        if p.is_empty() || p.len() != q.len() || p.len() != novel_assignment.len() {
            return Err(Error::invalid(
                "vote rate vectors must be non-empty and equally long",
            ));
        }
        if p.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::invalid("novel detection rates must lie in (0, 1]"));
        }
        if q.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::invalid("false-novel rates must lie in [0, 1)"));
        }
        Ok(Self {
            p,
            q,
            novel_assignment,
        })
    }

    /// `len` members with identical rates and no novel assignments.
    pub fn uniform(len: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(vec![p; len], vec![q; len], vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Vote probability of member `l` on a known input.
    pub fn known_rate(&self, l: usize) -> f64 {
        if self.novel_assignment[l] {
            self.p[l]
        } else {
            self.q[l]
        }
    }

    pub fn mu_novel(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mu_known(&self) -> f64 {
        (0..self.len()).map(|l| self.known_rate(l)).sum()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.mu_novel() + self.mu_known())
    }
}

/// Vote-count histograms over `0..=L` for both conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteSimulation {
    pub novel_counts: Vec<u64>,
    pub known_counts: Vec<u64>,
    pub trials: usize,
    pub midpoint: f64,
    /// `P̂[X < midpoint | novel]`
    pub miss_rate: f64,
    /// `P̂[X > midpoint | known]`
    pub false_alarm_rate: f64,
    /// Mean of the two error rates.
    pub total_error: f64,
}

impl VoteSimulation {
    pub fn novel_fraction_below(&self, threshold: f64) -> f64 {
        fraction(&self.novel_counts, self.trials, |x| (x as f64) < threshold)
    }

    pub fn known_fraction_above(&self, threshold: f64) -> f64 {
        fraction(&self.known_counts, self.trials, |x| (x as f64) > threshold)
    }
}

fn fraction(hist: &[u64], trials: usize, keep: impl Fn(usize) -> bool) -> f64 {
    let hits: u64 = hist
        .iter()
        .enumerate()
        .filter(|(x, _)| keep(*x))
        .map(|(_, c)| c)
        .sum();
    hits as f64 / trials as f64
}

/// Draws independent votes. Trials run in fixed-size batches with their own
/// derived seeds, so results do not depend on thread count.
pub fn simulate_vote_distribution(
    rates: &VoteRates,
    trials: usize,
    seed: u64,
) -> Result<VoteSimulation> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let l = rates.len();
    let known: Vec<f64> = (0..l).map(|i| rates.known_rate(i)).collect();
    let batches = trials.div_ceil(BATCH);
    let (novel_counts, known_counts) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from(seed, &[b as u64]);
            let mut novel_hist = vec![0u64; l + 1];
            let mut known_hist = vec![0u64; l + 1];
            let size = BATCH.min(trials - b * BATCH);
            for _ in 0..size {
                let x = rates.p.iter().filter(|&&p| rng.random::<f64>() < p).count();
                novel_hist[x] += 1;
                let y = known.iter().filter(|&&q| rng.random::<f64>() < q).count();
                known_hist[y] += 1;
            }
            (novel_hist, known_hist)
        })
        .reduce(
            || (vec![0u64; l + 1], vec![0u64; l + 1]),
            |(mut a, mut b), (c, d)| {
                a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                b.iter_mut().zip(d).for_each(|(x, y)| *x += y);
                (a, b)
            },
        );
    let midpoint = rates.midpoint();
    let mut sim = VoteSimulation {
        novel_counts,
        known_counts,
        trials,
        midpoint,
        miss_rate: 0.0,
        false_alarm_rate: 0.0,
        total_error: 0.0,
    };
    sim.miss_rate = sim.novel_fraction_below(midpoint);
    sim.false_alarm_rate = sim.known_fraction_above(midpoint);
    sim.total_error = 0.5 * (sim.miss_rate + sim.false_alarm_rate);
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_members() {
        let rates = VoteRates::uniform(7, 1.0, 0.0).unwrap();
        let sim = simulate_vote_distribution(&rates, 1000, 1).unwrap();
        assert_eq!(sim.novel_counts[7], 1000);
        assert_eq!(sim.known_counts[0], 1000);
        assert_eq!(sim.total_error, 0.0);
    }

    #[test]
    fn symmetric_rates_share_an_expectation() {
        let rates = VoteRates::uniform(10, 0.5, 0.5).unwrap();
        assert_eq!(rates.mu_novel(), rates.mu_known());
        let sim = simulate_vote_distribution(&rates, 40_000, 2).unwrap();
        let mean = |h: &[u64]| {
            h.iter()
                .enumerate()
                .map(|(x, c)| x as f64 * *c as f64)
                .sum::<f64>()
                / 40_000.0
        };
        assert!((mean(&sim.novel_counts) - 5.0).abs() < 0.05);
        assert!((mean(&sim.known_counts) - 5.0).abs() < 0.05);
    }

    #[test]
    fn novel_assignment_switches_rate() {
        let rates = VoteRates::new(vec![0.8, 0.8], vec![0.1, 0.1], vec![true, false]).unwrap();
        assert!((rates.mu_known() - 0.9).abs() < 1e-15);
        assert!(rates.mu_known() <= rates.mu_novel());
    }

    #[test]
    fn histograms_are_deterministic_and_complete() {
        let rates = VoteRates::uniform(12, 0.6, 0.2).unwrap();
        let a = simulate_vote_distribution(&rates, 25_001, 9).unwrap();
        let b = simulate_vote_distribution(&rates, 25_001, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.novel_counts.iter().sum::<u64>(), 25_001);
        assert_eq!(a.known_counts.iter().sum::<u64>(), 25_001);
    }

    #[test]
    fn invalid_rates() {
        assert!(VoteRates::uniform(3, 0.0, 0.1).is_err());
        assert!(VoteRates::uniform(3, 0.5, 1.0).is_err());
        assert!(VoteRates::new(vec![0.5], vec![0.1, 0.1], vec![false]).is_err());
        let rates = VoteRates::uniform(3, 0.5, 0.1).unwrap();
        assert!(simulate_vote_distribution(&rates, 0, 0).is_err());
    }
}
