//! Proof-of-Merit (PoM) consensus simulation.
//!
//! PoM selects a round winner from a pool of solvers by accumulated solution
//! quality (the Winner Selection Score) instead of hashing work or stake. A
//! decentralization control parameter `lambda` damps the previous winner's
//! next-round contribution, trading efficiency for equity.
//!
//! Module map:
//!
//! - [`consensus`] — the core state machine: TUG, WSS accumulation with the
//!   post-winning adjustment, winner selection, and the quit rule.
//! - [`harness`] — deterministic multi-epoch agent-based experiments with the
//!   abstract capability-equals-TUG solver model.
//! - [`metrics`] — inefficiency, equity, Gini, win distributions, and the
//!   normalized efficiency/equity tradeoff curve.
//! - [`dcp`] — the system designer's constrained choice of `lambda`.
//! - [`rideshare`] — a rider/driver matching market instantiation with
//!   heterogeneous matcher heuristics and private rider acceptance.
//! - [`ledger`] — a minimal hash-chained block ledger for realized matches.
//! - [`rng`] — seed derivation for reproducible parallel substreams.

pub mod consensus;
pub mod dcp;
pub mod harness;
pub mod ledger;
pub mod metrics;
pub mod rideshare;
pub mod rng;

pub use consensus::{PomParams, RoundOutcome, SolverId, SolverState};
pub use harness::{EpochConfig, EpochResult, ExperimentResult};
