//! Executable form of the vote-count analysis: Chernoff tail bounds for the
//! ensemble score, a Monte-Carlo simulator of independent votes, and
//! empirical checks of the assumptions behind them.

mod chernoff;
mod diagnostics;
mod simulate;

pub use self::chernoff::{chernoff_row, chernoff_upper_bounds, ChernoffRow};
pub use self::diagnostics::{
    ks_statistic, requirement_diagnostics, Category, Diagnostics, ScatterRow,
};
pub use self::simulate::{simulate_vote_distribution, VoteRates, VoteSimulation};
