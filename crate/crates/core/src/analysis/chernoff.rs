use super::simulate::{simulate_vote_distribution, VoteRates};
use crate::error::{Error, Result};

/// Multiplicative Chernoff bounds for a sum of independent Bernoulli votes
/// with mean `mu`:
///
/// * `P[X > (1+δ)μ] ≤ (e^δ / (1+δ)^(1+δ))^μ`
/// * `P[X < (1−δ)μ] ≤ (e^−δ / (1−δ)^(1−δ))^μ`
///
/// Returned as `(upper_tail, lower_tail)`.
pub fn chernoff_upper_bounds(mu: f64, delta: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid("Chernoff mean must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("Chernoff delta must lie in (0, 1)"));
    }
    let upper = (mu * (delta - (1.0 + delta) * delta.ln_1p())).exp();
    let lower = (mu * (-delta - (1.0 - delta) * (-delta).ln_1p())).exp();
    Ok((upper.min(1.0), lower.min(1.0)))
}

/// One line of the bound-vs-simulation report. Tails that the bounds do not
/// cover (zero mean, δ outside (0,1)) are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffRow {
    pub ensemble_size: usize,
    pub delta: f64,
    pub mu_novel: f64,
    pub mu_known: f64,
    /// Bound on `P[X > (1+δ)μ_known | known]`.
    pub bound_upper: f64,
    /// Bound on `P[X < (1−δ)μ_novel | novel]`.
    pub bound_lower: f64,
    pub empirical_upper: f64,
    pub empirical_lower: f64,
    /// Balanced error of the midpoint threshold `(μ_known + μ_novel) / 2`.
    pub midpoint_error: f64,
}

impl ChernoffRow {
    pub const CSV_HEADER: &'static str =
        "L,delta,mu_novel,mu_known,bound_upper,bound_lower,empirical_upper,empirical_lower,midpoint_error";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.ensemble_size,
            self.delta,
            self.mu_novel,
            self.mu_known,
            self.bound_upper,
            self.bound_lower,
            self.empirical_upper,
            self.empirical_lower,
            self.midpoint_error
        )
    }
}

/// Simulates `rates` and evaluates both bounds at `delta`, defaulting to
/// `(μ_novel − μ_known) / (μ_novel + μ_known)`, the value at which both
/// bounded thresholds coincide.
pub fn chernoff_row(
    rates: &VoteRates,
    delta: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<ChernoffRow> {
    let (mu_novel, mu_known) = (rates.mu_novel(), rates.mu_known());
    let delta = delta.unwrap_or_else(|| {
        let total = mu_novel + mu_known;
        if total > 0.0 {
            (mu_novel - mu_known) / total
        } else {
            f64::NAN
        }
    });
    let sim = simulate_vote_distribution(rates, trials, seed)?;
    let valid = delta > 0.0 && delta < 1.0;
    let upper_bound = |mu: f64| chernoff_upper_bounds(mu, delta).unwrap_or((f64::NAN, f64::NAN));
    let (bound_upper, empirical_upper) = if valid && mu_known > 0.0 {
        (
            upper_bound(mu_known).0,
            sim.known_fraction_above((1.0 + delta) * mu_known),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let (bound_lower, empirical_lower) = if valid && mu_novel > 0.0 {
        (
            upper_bound(mu_novel).1,
            sim.novel_fraction_below((1.0 - delta) * mu_novel),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ChernoffRow {
        ensemble_size: rates.len(),
        delta,
        mu_novel,
        mu_known,
        bound_upper,
        bound_lower,
        empirical_upper,
        empirical_lower,
        midpoint_error: sim.total_error,
    })
}
