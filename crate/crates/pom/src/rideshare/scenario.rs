//! End-to-end ride-matching demo: PoM over a live market.
//!
//! Each round, every active matcher proposes a matching for the current
//! instance; TUGs are scored against a freshly randomized benchmark pairing;
//! the consensus layer picks the winner; matched riders accept or reject
//! privately; accepted matches become transactions in a new block appended by
//! the winner and validated against the round context; then the market rolls
//! forward. Randomness is split into fixed substreams (market, benchmark, one
//! per matcher) so the whole run is a pure function of the scenario.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consensus::{self, PomParams, RoundOutcome, SolverId, SolverState};
use crate::ledger::{validate_block, Chain, RoundContext, Transaction};
use crate::rng;

use super::{
    advance_market, benchmark_match, build_instance, heuristic_match, rider_responses,
    rideshare_tug, MarketConfig, MatchingSolution, RideshareError,
};

/// Substream of the market population draws.
pub const MARKET_STREAM: u64 = 1;
/// Substream of the per-round benchmark pairings.
pub const BENCHMARK_STREAM: u64 = 2;
/// Matcher `k` draws from substream `MATCHER_STREAM_BASE + k`.
pub const MATCHER_STREAM_BASE: u64 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Market(#[from] RideshareError),
    #[error(transparent)]
    Params(#[from] consensus::ConsensusError),
    #[error("scenario needs at least one round")]
    NoRounds,
    #[error("scenario needs at least one matcher")]
    NoMatchers,
    #[error("matcher skill must lie in [0, 1], got {0}")]
    InvalidSkill(f64),
}

/// A complete ride-demo configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RideScenario {
    pub rounds: u32,
    pub initial_riders: u32,
    pub initial_drivers: u32,
    pub market: MarketConfig,
    /// One matcher per entry; matcher `k` runs at `matcher_skills[k]`.
    pub matcher_skills: Vec<f64>,
    pub lambda: f64,
    pub quit_checkpoint: u32,
    pub seed: u64,
}

impl Default for RideScenario {
    fn default() -> Self {
        Self {
            rounds: 50,
            initial_riders: 20,
            initial_drivers: 20,
            market: MarketConfig::default(),
            matcher_skills: vec![1.0, 0.75, 0.5, 0.25, 0.0],
            lambda: 0.3,
            quit_checkpoint: 20,
            seed: 0,
        }
    }
}

impl RideScenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.rounds == 0 {
            return Err(ScenarioError::NoRounds);
        }
        if self.matcher_skills.is_empty() {
            return Err(ScenarioError::NoMatchers);
        }
        for &skill in &self.matcher_skills {
            if !(0.0..=1.0).contains(&skill) || skill.is_nan() {
                return Err(ScenarioError::InvalidSkill(skill));
            }
        }
        self.market.validate()?;
        PomParams::new(self.lambda, self.quit_checkpoint)?;
        Ok(())
    }
}

/// Plot-ready trace of one demo round.
#[derive(Debug, Clone, PartialEq)]
pub struct RideRoundRecord {
    pub round: u32,
    /// Market size when the round opened.
    pub riders: u32,
    pub drivers: u32,
    /// Pairs proposed by the winning solution, and how many riders accepted.
    pub matched: u32,
    pub accepted: u32,
    pub acceptance_rate: f64,
    pub winner: SolverId,
    pub best: SolverId,
    pub winner_tug: f64,
    pub best_tug: f64,
    pub quit_ids: Vec<SolverId>,
}

/// Everything a demo run produces.
#[derive(Debug, Clone)]
pub struct RideDemoResult {
    pub rounds: Vec<RideRoundRecord>,
    pub outcomes: Vec<RoundOutcome>,
    pub chain: Chain,
}

/// Runs the full demo loop; one block is appended per round.
pub fn run_ride_demo(scenario: &RideScenario) -> Result<RideDemoResult, ScenarioError> {
    scenario.validate()?;
    let params = PomParams::new(scenario.lambda, scenario.quit_checkpoint)?;

    let mut market_rng = rng::stream_rng(scenario.seed, MARKET_STREAM);
    let mut bench_rng = rng::stream_rng(scenario.seed, BENCHMARK_STREAM);
    let mut matcher_rngs: Vec<ChaCha8Rng> = (0..scenario.matcher_skills.len())
        .map(|k| rng::stream_rng(scenario.seed, MATCHER_STREAM_BASE + k as u64))
        .collect();

    let mut instance = build_instance(
        &scenario.market,
        scenario.initial_riders,
        scenario.initial_drivers,
        &mut market_rng,
    )?;
    let mut states: Vec<SolverState> = (0..scenario.matcher_skills.len())
        .map(|k| SolverState::new(SolverId(k as u32)))
        .collect();

    let mut chain = Chain::new();
    let mut records = Vec::with_capacity(scenario.rounds as usize);
    let mut outcomes = Vec::with_capacity(scenario.rounds as usize);
    let mut prev_winner = None;
    let mut prev_acceptance = 1.0;

    for round in 1..=scenario.rounds {
        let riders_before = instance.num_riders() as u32;
        let drivers_before = instance.num_drivers() as u32;
        let pairable = instance.num_riders().min(instance.num_drivers()) > 0;

        // Benchmark and proposals. With no pairable participants every
        // solution is empty and every TUG is zero; the benchmark is skipped
        // because a zero-utility baseline defines no gain.
        let mut solutions: BTreeMap<SolverId, MatchingSolution> = BTreeMap::new();
        let mut tugs: BTreeMap<SolverId, f64> = BTreeMap::new();
        let benchmark = pairable.then(|| benchmark_match(&instance, &mut bench_rng));
        for state in states.iter().filter(|s| s.is_active()) {
            let id = state.id();
            let skill = scenario.matcher_skills[id.0 as usize];
            let solution = if pairable {
                heuristic_match(&instance, skill, &mut matcher_rngs[id.0 as usize])
            } else {
                MatchingSolution::new(Vec::new(), &instance)
            };
            let tug = match &benchmark {
                Some(bench) => rideshare_tug(&instance, &solution, bench)
                    .expect("nonempty benchmark has positive utility"),
                None => 0.0,
            };
            solutions.insert(id, solution);
            tugs.insert(id, tug);
        }

        let mut response: Option<(Vec<(usize, usize)>, u32)> = None;
        let outcome = consensus::step_round(
            &mut states,
            tugs,
            prev_winner,
            prev_acceptance,
            &params,
            round,
            |winner| {
                let (accepted, rate) = rider_responses(&instance, &solutions[&winner]);
                let matched = solutions[&winner].len() as u32;
                response = Some((accepted, matched));
                rate
            },
        );
        let (accepted, matched) = response.expect("acceptance closure always runs");
        let winning_solution = &solutions[&outcome.winner];

        let transactions: Vec<Transaction> = accepted
            .iter()
            .map(|&(r, d)| Transaction {
                round,
                rider: instance.riders()[r].id,
                driver: instance.drivers()[d].id,
                utility: instance.utility_at(r, d),
            })
            .collect();
        let block = chain.append_block(round, outcome.winner, transactions.clone());

        // Non-winners audit the block against what riders actually accepted.
        let context =
            RoundContext { round, winner: outcome.winner, accepted: transactions };
        validate_block(block, &context).expect("winner-produced block must validate");

        records.push(RideRoundRecord {
            round,
            riders: riders_before,
            drivers: drivers_before,
            matched,
            accepted: accepted.len() as u32,
            acceptance_rate: outcome.acceptance_rate,
            winner: outcome.winner,
            best: outcome.best,
            winner_tug: outcome.tug_by_solver[&outcome.winner],
            best_tug: outcome.tug_by_solver[&outcome.best],
            quit_ids: outcome.quit_ids.clone(),
        });

        instance =
            advance_market(&instance, winning_solution, &accepted, &scenario.market, &mut market_rng);
        prev_winner = Some(outcome.winner);
        prev_acceptance = outcome.acceptance_rate;
        outcomes.push(outcome);
    }

    Ok(RideDemoResult { rounds: records, outcomes, chain })
}
