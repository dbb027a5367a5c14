//! Agent-based experiment harness for the abstract solver model.
//!
//! Each epoch draws solver capabilities from `U(L, 1)`, fixes every solver's
//! per-round TUG equal to its capability, and runs the consensus for
//! `total_rounds` rounds under a constant exogenous acceptance rate. Epochs
//! are independent: epoch `i` of a run with master seed `m` uses seed
//! [`crate::rng::substream_seed`]`(m, i)`, so traces are reproducible and
//! unaffected by how many epochs are requested or how they are scheduled.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::consensus::{self, ConsensusError, PomParams, RoundOutcome, SolverId, SolverState};
use crate::metrics::{self, MetricsReport};
use crate::rng;

/// Rounds that must elapse after the last quit for an epoch to count as
/// converged, so steady-state averages cover at least this many rounds.
pub const MIN_STEADY_TAIL: u32 = 100;

/// Substream index of the capability draws within an epoch seed.
pub const CAPABILITY_STREAM: u64 = 0;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Params(#[from] ConsensusError),
    #[error("capability lower bound must lie in (0, 1), got {0}")]
    InvalidLowerBound(f64),
    #[error("acceptance rate must lie in [0, 1], got {0}")]
    InvalidAcceptanceRate(f64),
    #[error("total rounds must be at least 1")]
    InvalidRounds,
    #[error("solver count must be at least 1")]
    InvalidSolverCount,
    #[error("epoch count must be at least 1")]
    InvalidEpochCount,
    #[error("none of the {epochs} epochs converged (tail shorter than {min_tail} rounds); \
             increase total_rounds or lower quit_checkpoint")]
    NoConvergedEpochs { epochs: u32, min_tail: u32 },
}

/// Parameters of one simulated epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochConfig {
    /// Rounds per epoch (T).
    pub total_rounds: u32,
    /// Initial solver count.
    pub num_solvers: u32,
    /// Lower bound L of the capability distribution U(L, 1).
    pub capability_lower_bound: f64,
    /// Decentralization control parameter.
    pub lambda: f64,
    /// Constant exogenous user acceptance rate.
    pub acceptance_rate: f64,
    /// Rounds without a win before a solver quits.
    pub quit_checkpoint: u32,
    /// Epoch seed (the experiment runner derives one per epoch).
    pub seed: u64,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            total_rounds: 1500,
            num_solvers: 100,
            capability_lower_bound: 0.7,
            lambda: 0.5,
            acceptance_rate: 0.8,
            quit_checkpoint: 100,
            seed: 0,
        }
    }
}

impl EpochConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        PomParams::new(self.lambda, self.quit_checkpoint)?;
        if !(self.capability_lower_bound > 0.0 && self.capability_lower_bound < 1.0) {
            return Err(HarnessError::InvalidLowerBound(self.capability_lower_bound));
        }
        if !(0.0..=1.0).contains(&self.acceptance_rate) || self.acceptance_rate.is_nan() {
            return Err(HarnessError::InvalidAcceptanceRate(self.acceptance_rate));
        }
        if self.total_rounds == 0 {
            return Err(HarnessError::InvalidRounds);
        }
        if self.num_solvers == 0 {
            return Err(HarnessError::InvalidSolverCount);
        }
        Ok(())
    }
}

/// Full trace of one epoch.
#[derive(Debug, Clone)]
pub struct EpochResult {
    pub outcomes: Vec<RoundOutcome>,
    pub capabilities: BTreeMap<SolverId, f64>,
    /// Round of the last quit event, 0 if none.
    pub steady_state_round: u32,
    pub converged: bool,
    /// Solvers still active at the end of the epoch.
    pub survivor_ids: BTreeSet<SolverId>,
}

/// Draws `num_solvers` capabilities independently and uniformly from
/// `[lower_bound, 1)`, consumed in ascending solver-id order.
pub fn sample_capabilities(
    num_solvers: u32,
    lower_bound: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<SolverId, f64>, HarnessError> {
    if !(lower_bound > 0.0 && lower_bound < 1.0) {
        return Err(HarnessError::InvalidLowerBound(lower_bound));
    }
    Ok((0..num_solvers)
        .map(|i| (SolverId(i), lower_bound + rng.random::<f64>() * (1.0 - lower_bound)))
        .collect())
}

/// Steady-state detection over a full trace: the steady-state round is the
/// round of the last quit event (0 when no solver ever quits). An epoch
/// converged if no quits occurred at all, or if at least [`MIN_STEADY_TAIL`]
/// rounds follow the last quit.
pub fn detect_steady_state(outcomes: &[RoundOutcome]) -> (u32, bool) {
    assert!(!outcomes.is_empty(), "steady-state detection needs at least one round");
    let total_rounds = outcomes.len() as u32;
    let last_quit = outcomes
        .iter()
        .rev()
        .find(|o| !o.quit_ids.is_empty())
        .map(|o| o.round);
    match last_quit {
        None => (0, true),
        Some(s) => (s, total_rounds - s >= MIN_STEADY_TAIL),
    }
}

/// Runs a single epoch: TUG of every active solver equals its capability in
/// every round, and the acceptance rate is the configured constant.
pub fn run_epoch(config: &EpochConfig) -> Result<EpochResult, HarnessError> {
    config.validate()?;
    let params = PomParams::new(config.lambda, config.quit_checkpoint)?;
    let mut cap_rng = rng::stream_rng(config.seed, CAPABILITY_STREAM);
    let capabilities =
        sample_capabilities(config.num_solvers, config.capability_lower_bound, &mut cap_rng)?;
    // Dense lookup for the hot loop; ids are 0..num_solvers.
    let capability_of: Vec<f64> = capabilities.values().copied().collect();

    let mut states: Vec<SolverState> =
        capabilities.keys().map(|&id| SolverState::new(id)).collect();
    let mut outcomes = Vec::with_capacity(config.total_rounds as usize);
    let mut prev_winner = None;
    let mut prev_acceptance = config.acceptance_rate;

    for round in 1..=config.total_rounds {
        let tugs: BTreeMap<SolverId, f64> = states
            .iter()
            .filter(|s| s.is_active())
            .map(|s| (s.id(), capability_of[s.id().0 as usize]))
            .collect();
        let outcome = consensus::step_round(
            &mut states,
            tugs,
            prev_winner,
            prev_acceptance,
            &params,
            round,
            |_| config.acceptance_rate,
        );
        prev_winner = Some(outcome.winner);
        prev_acceptance = outcome.acceptance_rate;
        outcomes.push(outcome);
    }

    let (steady_state_round, converged) = detect_steady_state(&outcomes);
    let survivor_ids = states.iter().filter(|s| s.is_active()).map(|s| s.id()).collect();
    Ok(EpochResult { outcomes, capabilities, steady_state_round, converged, survivor_ids })
}

/// One epoch's measurements within an experiment. `report` is `None` only
/// when the last quit landed on the final round, leaving no steady-state
/// window to measure.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: u32,
    pub seed: u64,
    pub steady_state_round: u32,
    pub converged: bool,
    pub equity: u32,
    pub report: Option<MetricsReport>,
    /// Steady-state wins of the highest-capability solver.
    pub top_capability_wins: Option<u32>,
}

/// Mean/standard deviation of each metric over the converged epochs.
#[derive(Debug, Clone)]
pub struct AggregateStats {
    pub epochs: u32,
    pub converged_epochs: u32,
    pub non_converged_epochs: u32,
    pub mean_inefficiency: f64,
    pub std_inefficiency: f64,
    pub mean_equity: f64,
    pub std_equity: f64,
    pub mean_gini: f64,
    pub std_gini: f64,
    pub mean_convergence_round: f64,
    pub std_convergence_round: f64,
    pub mean_top_capability_wins: f64,
    /// Per-bin mean of the percentile win curves, ascending by bin.
    pub mean_percentile_wins: Vec<(f64, f64)>,
}

/// A full multi-epoch experiment.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<EpochRecord>,
    pub aggregate: AggregateStats,
}

fn epoch_record(epoch: u32, config: &EpochConfig) -> EpochRecord {
    let result = run_epoch(config).expect("experiment config already validated");
    let report = metrics::report(
        &result.outcomes,
        result.steady_state_round,
        &result.survivor_ids,
        &result.capabilities,
        config.capability_lower_bound,
    )
    .ok();
    let top_capability_wins = report.as_ref().map(|r| {
        let top_id = result
            .capabilities
            .iter()
            .fold(None::<(SolverId, f64)>, |acc, (&id, &q)| match acc {
                Some((_, best)) if best >= q => acc,
                _ => Some((id, q)),
            })
            .expect("at least one solver")
            .0;
        r.win_counts.get(&top_id).copied().unwrap_or(0)
    });
    EpochRecord {
        epoch,
        seed: config.seed,
        steady_state_round: result.steady_state_round,
        converged: result.converged,
        equity: metrics::equity(&result.survivor_ids),
        report,
        top_capability_wins,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(records: &[EpochRecord]) -> Result<AggregateStats, HarnessError> {
    let converged: Vec<&EpochRecord> = records.iter().filter(|r| r.converged).collect();
    if converged.is_empty() {
        return Err(HarnessError::NoConvergedEpochs {
            epochs: records.len() as u32,
            min_tail: MIN_STEADY_TAIL,
        });
    }
    let pull = |f: &dyn Fn(&EpochRecord) -> f64| -> Vec<f64> {
        converged.iter().map(|r| f(r)).collect()
    };
    fn report(r: &EpochRecord) -> &MetricsReport {
        r.report.as_ref().expect("converged epochs always have a steady-state window")
    }
    let (mean_inefficiency, std_inefficiency) = mean_std(&pull(&|r| report(r).inefficiency));
    let (mean_equity, std_equity) = mean_std(&pull(&|r| f64::from(r.equity)));
    let (mean_gini, std_gini) = mean_std(&pull(&|r| report(r).gini));
    let (mean_convergence_round, std_convergence_round) =
        mean_std(&pull(&|r| f64::from(r.steady_state_round)));
    let (mean_top_capability_wins, _) =
        mean_std(&pull(&|r| f64::from(r.top_capability_wins.unwrap_or(0))));

    // Bin-wise mean of the percentile curves; bins may be absent in an epoch.
    let mut bin_sums: BTreeMap<u64, (f64, u32)> = BTreeMap::new();
    for r in &converged {
        for &(bin, mean_wins) in &report(r).percentile_wins {
            let key = (bin / metrics::PERCENTILE_BIN_WIDTH).round() as u64;
            let entry = bin_sums.entry(key).or_insert((0.0, 0));
            entry.0 += mean_wins;
            entry.1 += 1;
        }
    }
    let bins_per_unit = (1.0 / metrics::PERCENTILE_BIN_WIDTH).round();
    let mean_percentile_wins = bin_sums
        .into_iter()
        .map(|(key, (sum, count))| (key as f64 / bins_per_unit, sum / f64::from(count)))
        .collect();

    Ok(AggregateStats {
        epochs: records.len() as u32,
        converged_epochs: converged.len() as u32,
        non_converged_epochs: (records.len() - converged.len()) as u32,
        mean_inefficiency,
        std_inefficiency,
        mean_equity,
        std_equity,
        mean_gini,
        std_gini,
        mean_convergence_round,
        std_convergence_round,
        mean_top_capability_wins,
        mean_percentile_wins,
    })
}

/// Runs `epochs` independent epochs with per-epoch seeds derived from
/// `config.seed` and aggregates metrics over the converged ones.
///
/// Epochs execute in parallel; records are ordered by epoch index, so the
/// result is identical regardless of scheduling.
pub fn run_experiment(config: &EpochConfig, epochs: u32) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    if epochs == 0 {
        return Err(HarnessError::InvalidEpochCount);
    }
    let records: Vec<EpochRecord> = (0..epochs)
        .into_par_iter()
        .map(|epoch| {
            let mut epoch_config = config.clone();
            epoch_config.seed = rng::substream_seed(config.seed, u64::from(epoch));
            epoch_record(epoch, &epoch_config)
        })
        .collect();
    let aggregate = aggregate(&records)?;
    Ok(ExperimentResult { records, aggregate })
}

/// Outcome of the quit-checkpoint calibration search.
#[derive(Debug, Clone)]
pub struct QcCalibration {
    pub quit_checkpoint: u32,
    pub mean_convergence_round: f64,
    pub within_tolerance: bool,
    /// Every (qc, mean convergence round) pair evaluated, in search order.
    pub evaluations: Vec<(u32, f64)>,
}

/// Searches `range` for the quit checkpoint whose mean convergence round is
/// closest to `target`, stopping early once within `tolerance`.
///
/// Mean convergence round grows with the quit checkpoint (solvers linger
/// longer before quitting), so the search bisects the range. Configurations
/// where no epoch converges are treated as beyond-target.
pub fn calibrate_qc(
    base: &EpochConfig,
    epochs: u32,
    target: f64,
    tolerance: f64,
    range: RangeInclusive<u32>,
) -> Result<QcCalibration, HarnessError> {
    let (mut lo, mut hi) = (*range.start(), *range.end());
    assert!(lo >= 1 && lo <= hi, "calibration range must be nonempty with qc >= 1");
    base.validate()?;
    if epochs == 0 {
        return Err(HarnessError::InvalidEpochCount);
    }

    let mut evaluations = Vec::new();
    let evaluate = |qc: u32, evals: &mut Vec<(u32, f64)>| -> Result<f64, HarnessError> {
        let mut config = base.clone();
        config.quit_checkpoint = qc;
        let mean = match run_experiment(&config, epochs) {
            Ok(result) => result.aggregate.mean_convergence_round,
            Err(HarnessError::NoConvergedEpochs { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        evals.push((qc, mean));
        Ok(mean)
    };

    fn error(mean: f64, target: f64) -> f64 {
        (mean - target).abs()
    }

    let at_lo = evaluate(lo, &mut evaluations)?;
    let mut best = (lo, at_lo);
    if at_lo < target && hi > lo {
        let at_hi = evaluate(hi, &mut evaluations)?;
        if error(at_hi, target) < error(best.1, target) {
            best = (hi, at_hi);
        }
        if at_hi > target {
            // The target is bracketed: bisect toward it.
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let mean = evaluate(mid, &mut evaluations)?;
                if error(mean, target) < error(best.1, target) {
                    best = (mid, mean);
                }
                if error(mean, target) <= tolerance {
                    break;
                }
                if mean < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }

    Ok(QcCalibration {
        quit_checkpoint: best.0,
        mean_convergence_round: best.1,
        within_tolerance: error(best.1, target) <= tolerance,
        evaluations,
    })
}
