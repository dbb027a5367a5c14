//! The PoM consensus state machine.
//!
//! Each round, every active solver submits a solution whose quality is scored
//! as a Total Utility Gain (TUG): the normalized improvement of its total user
//! utility over a benchmark solution, floored at zero. Solvers accumulate a
//! Winner Selection Score (WSS): the running sum of TUG times a post-winning
//! adjustment. The adjustment is `alpha * (1 - lambda)` in the round
//! immediately after a win (`alpha` being the previous round's user acceptance
//! rate) and 1 otherwise, so `lambda` — the decentralization control
//! parameter — damps a winner's momentum and spreads wins across the pool.
//! A solver quits after `quit_checkpoint` consecutive rounds without a win.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A stable, orderable solver identifier. Ties in winner selection are broken
/// toward the smallest id, so ordering is part of the contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SolverId(pub u32);

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Errors from constructing or applying consensus parameters.
#[derive(Debug, Error, PartialEq)]
pub enum ConsensusError {
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("quit checkpoint must be at least 1")]
    InvalidQuitCheckpoint,
    #[error("benchmark utility must be positive and finite, got {0}")]
    NonPositiveBenchmark(f64),
}

/// Mechanism parameters: the decentralization control parameter `lambda` and
/// the quit checkpoint `qc` (rounds without a win before a solver exits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PomParams {
    lambda: f64,
    quit_checkpoint: u32,
}

impl PomParams {
    pub fn new(lambda: f64, quit_checkpoint: u32) -> Result<Self, ConsensusError> {
        if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
            return Err(ConsensusError::InvalidLambda(lambda));
        }
        if quit_checkpoint == 0 {
            return Err(ConsensusError::InvalidQuitCheckpoint);
        }
        Ok(Self { lambda, quit_checkpoint })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn quit_checkpoint(&self) -> u32 {
        self.quit_checkpoint
    }
}

/// A solver's consensus-visible state.
///
/// `wss` is non-decreasing while the solver is active; `last_win_round` is 0
/// for a solver who has never won, matching the quit rule's convention.
/// Quit solvers are kept (inactive) so metrics can read their history.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    id: SolverId,
    wss: f64,
    last_win_round: u32,
    win_rounds: Vec<u32>,
    active: bool,
}

impl SolverState {
    pub fn new(id: SolverId) -> Self {
        Self { id, wss: 0.0, last_win_round: 0, win_rounds: Vec::new(), active: true }
    }

    pub fn id(&self) -> SolverId {
        self.id
    }

    /// Cumulative winner selection score.
    pub fn wss(&self) -> f64 {
        self.wss
    }

    /// Round of the most recent win, 0 if the solver never won.
    pub fn last_win_round(&self) -> u32 {
        self.last_win_round
    }

    /// Rounds in which this solver was selected, in ascending order.
    pub fn win_rounds(&self) -> &[u32] {
        &self.win_rounds
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    fn record_win(&mut self, round: u32) {
        debug_assert!(round > self.last_win_round);
        self.win_rounds.push(round);
        self.last_win_round = round;
    }
}

/// Per-round record: submitted TUGs, the selected winner, the quality-best
/// solver, the observed acceptance rate, and the solvers removed by the quit
/// rule after this round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub round: u32,
    pub tug_by_solver: BTreeMap<SolverId, f64>,
    pub winner: SolverId,
    pub best: SolverId,
    pub acceptance_rate: f64,
    pub quit_ids: Vec<SolverId>,
}

/// Total Utility Gain of a solution: `max{0, (total - benchmark) / benchmark}`.
///
/// Solutions worse than the benchmark are floored at zero, eliminating
/// low-quality submissions from the score entirely.
pub fn tug_from_utilities(total_utility: f64, benchmark_utility: f64) -> Result<f64, ConsensusError> {
    if !(benchmark_utility > 0.0) || !benchmark_utility.is_finite() {
        return Err(ConsensusError::NonPositiveBenchmark(benchmark_utility));
    }
    assert!(total_utility.is_finite(), "total utility must be finite");
    Ok(((total_utility - benchmark_utility) / benchmark_utility).max(0.0))
}

/// Post-winning adjustment factor for the current round.
///
/// `prev_acceptance_rate * (1 - lambda)` if the solver won the previous round,
/// 1 otherwise. At round 1 every solver starts unadjusted; callers must pass
/// `was_winner_previous_round = false` there.
pub fn adjustment_score(
    was_winner_previous_round: bool,
    prev_acceptance_rate: f64,
    lambda: f64,
) -> f64 {
    assert!(
        (0.0..=1.0).contains(&prev_acceptance_rate),
        "acceptance rate out of range: {prev_acceptance_rate}"
    );
    assert!((0.0..=1.0).contains(&lambda), "lambda out of range: {lambda}");
    if was_winner_previous_round {
        prev_acceptance_rate * (1.0 - lambda)
    } else {
        1.0
    }
}

/// Adds this round's adjusted TUG to the solver's WSS.
///
/// Panics if the solver is inactive — quit solvers accumulate nothing.
pub fn accumulate_wss(state: &mut SolverState, tug: f64, adjustment: f64) {
    assert!(state.active, "cannot accumulate WSS for inactive solver {}", state.id);
    assert!(tug >= 0.0 && tug.is_finite(), "TUG out of range: {tug}");
    assert!((0.0..=1.0).contains(&adjustment), "adjustment out of range: {adjustment}");
    state.wss += tug * adjustment;
}

/// Selects the active solver with the highest WSS; ties break toward the
/// smallest id, making the result independent of input order.
///
/// Panics if no solver is active.
pub fn select_winner<'a, I>(states: I) -> SolverId
where
    I: IntoIterator<Item = &'a SolverState>,
{
    let mut best: Option<(SolverId, f64)> = None;
    for state in states.into_iter().filter(|s| s.active) {
        best = match best {
            None => Some((state.id, state.wss)),
            Some((id, wss)) => {
                if state.wss > wss || (state.wss == wss && state.id < id) {
                    Some((state.id, state.wss))
                } else {
                    Some((id, wss))
                }
            }
        };
    }
    best.expect("winner selection requires at least one active solver").0
}

/// Applies the quit rule after `round`: a solver survives iff
/// `round - last_win_round <= qc` (never-won solvers count from round 0).
/// Quit solvers are marked inactive; their ids are returned in ascending order.
pub fn apply_quit_rule(states: &mut [SolverState], round: u32, qc: u32) -> Vec<SolverId> {
    assert!(round >= 1, "rounds are 1-based");
    let mut quit = Vec::new();
    for state in states.iter_mut().filter(|s| s.active) {
        debug_assert!(state.last_win_round <= round);
        if round - state.last_win_round > qc {
            state.active = false;
            quit.push(state.id);
        }
    }
    quit.sort_unstable();
    quit
}

/// Argmax of TUG with the same smallest-id tie-break as winner selection.
fn best_by_tug(tug_by_solver: &BTreeMap<SolverId, f64>) -> SolverId {
    let mut best: Option<(SolverId, f64)> = None;
    for (&id, &tug) in tug_by_solver {
        best = match best {
            None => Some((id, tug)),
            // Ascending id iteration: a later entry replaces only on a
            // strictly larger TUG.
            Some((bid, btug)) => {
                if tug > btug {
                    Some((id, tug))
                } else {
                    Some((bid, btug))
                }
            }
        };
    }
    best.expect("TUG map must be nonempty").0
}

/// Advances the mechanism by one round.
///
/// In order: (1) every active solver's WSS accumulates its adjusted TUG,
/// (2) the winner is selected by WSS, (3) the winner's win history is updated,
/// (4) the quit rule removes overdue solvers, (5) the outcome is emitted with
/// `best` the TUG argmax over the solvers active during the round.
///
/// `tug_by_solver` must contain exactly the active solvers. `acceptance_rate`
/// is invoked once with the selected winner and must return this round's user
/// acceptance in `[0, 1]`; it is observed only after the winner's solution is
/// broadcast, which is why it cannot be a plain argument.
pub fn step_round(
    states: &mut [SolverState],
    tug_by_solver: BTreeMap<SolverId, f64>,
    prev_winner: Option<SolverId>,
    prev_acceptance: f64,
    params: &PomParams,
    round: u32,
    acceptance_rate: impl FnOnce(SolverId) -> f64,
) -> RoundOutcome {
    assert!(round >= 1, "rounds are 1-based");
    assert!(
        round > 1 || prev_winner.is_none(),
        "round 1 has no previous winner; every adjustment starts at 1"
    );

    let active_count = states.iter().filter(|s| s.active).count();
    assert_eq!(
        tug_by_solver.len(),
        active_count,
        "TUG map must cover exactly the active solvers"
    );

    for state in states.iter_mut().filter(|s| s.active) {
        let tug = *tug_by_solver
            .get(&state.id)
            .unwrap_or_else(|| panic!("missing TUG entry for active solver {}", state.id));
        let was_prev_winner = prev_winner == Some(state.id);
        let adjustment = adjustment_score(was_prev_winner, prev_acceptance, params.lambda());
        accumulate_wss(state, tug, adjustment);
    }

    let winner = select_winner(states.iter());
    let best = best_by_tug(&tug_by_solver);

    states
        .iter_mut()
        .find(|s| s.id == winner)
        .expect("winner is one of the input states")
        .record_win(round);

    let quit_ids = apply_quit_rule(states, round, params.quit_checkpoint());

    let alpha = acceptance_rate(winner);
    assert!((0.0..=1.0).contains(&alpha), "acceptance rate out of range: {alpha}");

    RoundOutcome { round, tug_by_solver, winner, best, acceptance_rate: alpha, quit_ids }
}
