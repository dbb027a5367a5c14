//! Performance measures over an epoch trace.
//!
//! Inefficiency is the mean steady-state gap between the best submitted TUG
//! and the winner's TUG; equity is the number of solvers surviving at steady
//! state. Win concentration is summarized by the Gini coefficient and by mean
//! wins per capability percentile. `normalize_roc` rescales a lambda sweep so
//! the `lambda = 0` and `lambda = 1` values anchor 0 and 1 on both axes.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::consensus::{RoundOutcome, SolverId};

/// Width of the capability-percentile bins used for cross-epoch averaging.
pub const PERCENTILE_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no steady-state window: steady state at round {steady_state_round} of {total_rounds}")]
    NoSteadyStateWindow { steady_state_round: u32, total_rounds: u32 },
    #[error("Gini is undefined for an empty population")]
    EmptyPopulation,
    #[error("Gini is undefined when every count is zero")]
    AllZeroCounts,
    #[error("sweep is missing the lambda = {0} endpoint")]
    MissingEndpoint(f64),
    #[error("sweep endpoints coincide; normalization is undefined")]
    DegenerateEndpoints,
}

/// Per-epoch measurement bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Mean steady-state gap between best and winning TUG.
    pub inefficiency: f64,
    /// Number of solvers surviving at steady state.
    pub equity: u32,
    /// Gini coefficient of steady-state win counts across the initial
    /// population (quit solvers hold zero wins).
    pub gini: f64,
    /// Round of the last quit event (0 if none).
    pub convergence_round: u32,
    /// Steady-state wins per surviving solver (zero-win survivors included).
    pub win_counts: BTreeMap<SolverId, u32>,
    /// Mean steady-state wins per capability-percentile bin, ascending.
    pub percentile_wins: Vec<(f64, f64)>,
}

/// Mean steady-state difference between the round-best TUG and the winner's
/// TUG, over rounds `s+1..=T`. Zero exactly when the winner is always best.
pub fn inefficiency(outcomes: &[RoundOutcome], steady_state_round: u32) -> Result<f64, MetricsError> {
    let total_rounds = outcomes.len() as u32;
    if total_rounds <= steady_state_round {
        return Err(MetricsError::NoSteadyStateWindow {
            steady_state_round,
            total_rounds,
        });
    }
    let window = &outcomes[steady_state_round as usize..];
    let gap_sum: f64 = window
        .iter()
        .map(|o| o.tug_by_solver[&o.best] - o.tug_by_solver[&o.winner])
        .sum();
    Ok(gap_sum / window.len() as f64)
}

/// Number of solvers staying in the system at steady state.
pub fn equity(survivors: &BTreeSet<SolverId>) -> u32 {
    survivors.len() as u32
}

/// Discrete Gini coefficient `sum_ij |x_i - x_j| / (2 n^2 mean)`, computed via
/// the equivalent sorted form in `O(n log n)`.
pub fn gini(counts: &[u64]) -> Result<f64, MetricsError> {
    if counts.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(MetricsError::AllZeroCounts);
    }
    let n = counts.len() as f64;
    let mut sorted: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("counts are finite"));
    let rank_weighted: f64 =
        sorted.iter().enumerate().map(|(i, x)| (i as f64 + 1.0) * x).sum();
    Ok(2.0 * rank_weighted / (n * total as f64) - (n + 1.0) / n)
}

/// Mean steady-state wins per capability percentile, binned at
/// [`PERCENTILE_BIN_WIDTH`].
///
/// A solver's percentile is the fraction of the initial population with
/// strictly lower capability. Solvers absent from `win_counts` (quitters and
/// zero-win survivors) contribute zero wins. Bins without solvers are omitted;
/// labels are bin lower edges, ascending.
pub fn percentile_wins(
    capabilities: &BTreeMap<SolverId, f64>,
    win_counts: &BTreeMap<SolverId, u32>,
    lower_bound: f64,
) -> Vec<(f64, f64)> {
    debug_assert!(capabilities
        .values()
        .all(|&q| q >= lower_bound && q < 1.0 + f64::EPSILON));
    let n = capabilities.len();
    if n == 0 {
        return Vec::new();
    }
    let bins = (1.0 / PERCENTILE_BIN_WIDTH).round() as usize;
    let mut sums = vec![0.0_f64; bins];
    let mut counts = vec![0u32; bins];
    for (id, &q) in capabilities {
        let below = capabilities.values().filter(|&&other| other < q).count();
        let percentile = below as f64 / n as f64;
        let bin = ((percentile / PERCENTILE_BIN_WIDTH) as usize).min(bins - 1);
        sums[bin] += f64::from(win_counts.get(id).copied().unwrap_or(0));
        counts[bin] += 1;
    }
    (0..bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| (b as f64 / bins as f64, sums[b] / f64::from(counts[b])))
        .collect()
}

/// Steady-state win counts: one entry per survivor (zero-win survivors
/// included), summing to the number of steady-state rounds.
pub fn steady_state_win_counts(
    outcomes: &[RoundOutcome],
    steady_state_round: u32,
    survivors: &BTreeSet<SolverId>,
) -> BTreeMap<SolverId, u32> {
    let mut counts: BTreeMap<SolverId, u32> = survivors.iter().map(|&id| (id, 0)).collect();
    for o in &outcomes[steady_state_round as usize..] {
        *counts
            .get_mut(&o.winner)
            .expect("steady-state winners never quit, so they are survivors") += 1;
    }
    counts
}

/// Full per-epoch report. Fails when no steady-state window exists
/// (last quit at the final round).
///
/// The Gini coefficient treats steady-state wins as wealth across the whole
/// initial population: solvers that quit hold zero. Restricting it to
/// survivors hides the concentration that quitting itself creates and flattens
/// the lambda trend entirely.
pub fn report(
    outcomes: &[RoundOutcome],
    steady_state_round: u32,
    survivors: &BTreeSet<SolverId>,
    capabilities: &BTreeMap<SolverId, f64>,
    lower_bound: f64,
) -> Result<MetricsReport, MetricsError> {
    let ine = inefficiency(outcomes, steady_state_round)?;
    let win_counts = steady_state_win_counts(outcomes, steady_state_round, survivors);
    let mut counts: Vec<u64> = win_counts.values().map(|&c| u64::from(c)).collect();
    counts.resize(capabilities.len(), 0);
    let gini = gini(&counts)?;
    let percentile_wins = percentile_wins(capabilities, &win_counts, lower_bound);
    Ok(MetricsReport {
        inefficiency: ine,
        equity: equity(survivors),
        gini,
        convergence_round: steady_state_round,
        win_counts,
        percentile_wins,
    })
}

/// One point of an aggregated lambda sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub lambda: f64,
    pub mean_inefficiency: f64,
    pub mean_equity: f64,
}

/// A sweep point with both coordinates affinely rescaled so the lambda = 0
/// value lands at 0 and the lambda = 1 value at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub lambda: f64,
    pub inefficiency: f64,
    pub equity: f64,
}

const LAMBDA_MATCH_EPS: f64 = 1e-9;

/// Normalizes a sweep onto the unit square using the lambda endpoints as
/// anchors. Requires points at lambda = 0 and lambda = 1 with distinct values
/// on each axis.
pub fn normalize_roc(points: &[SweepSummary]) -> Result<Vec<RocPoint>, MetricsError> {
    let at = |target: f64| -> Result<&SweepSummary, MetricsError> {
        points
            .iter()
            .find(|p| (p.lambda - target).abs() <= LAMBDA_MATCH_EPS)
            .ok_or(MetricsError::MissingEndpoint(target))
    };
    let zero = *at(0.0)?;
    let one = *at(1.0)?;
    let ine_span = one.mean_inefficiency - zero.mean_inefficiency;
    let equ_span = one.mean_equity - zero.mean_equity;
    if ine_span == 0.0 || equ_span == 0.0 {
        return Err(MetricsError::DegenerateEndpoints);
    }
    Ok(points
        .iter()
        .map(|p| RocPoint {
            lambda: p.lambda,
            inefficiency: (p.mean_inefficiency - zero.mean_inefficiency) / ine_span,
            equity: (p.mean_equity - zero.mean_equity) / equ_span,
        })
        .collect())
}
