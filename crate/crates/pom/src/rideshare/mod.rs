//! Rider/driver matching market: the transaction-generating problem solved by
//! PoM matchers.
//!
//! Riders and drivers occupy a square city; a rider's utility for a driver is
//! `1 / (1 + pickup_distance)`, bounded in (0, 1] and strictly decreasing in
//! wait distance. Matchers of heterogeneous skill propose one-to-one
//! matchings; each round's benchmark is a fresh uniformly random pairing.
//! Riders hold private acceptance thresholds, so the acceptance rate of the
//! winning solution is only observable after it is broadcast.

mod assignment;
pub mod scenario;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::consensus::{self, ConsensusError};

pub use assignment::optimal_assignment;
pub use scenario::{run_ride_demo, RideDemoResult, RideRoundRecord, RideScenario};

#[derive(Debug, Error, PartialEq)]
pub enum RideshareError {
    #[error("market config invalid: {0}")]
    InvalidConfig(String),
    #[error("benchmark solution has zero total utility; the instance admits no pairs")]
    DegenerateBenchmark,
}

/// A position in the city square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A rider: current location, destination, and a private minimum utility
/// below which a proposed match is rejected. Matchers never see the
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Rider {
    pub id: u64,
    pub location: Point,
    pub destination: Point,
    pub acceptance_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Driver {
    pub id: u64,
    pub location: Point,
}

/// Market population dynamics and rider-threshold parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    /// Side length of the square city.
    pub city_size: f64,
    /// New riders injected after every round.
    pub rider_arrivals: u32,
    /// New drivers injected after every round.
    pub driver_arrivals: u32,
    /// Rider acceptance thresholds are uniform on [threshold_min, threshold_max).
    pub threshold_min: f64,
    pub threshold_max: f64,
    /// Probability that a rider who rejects a match waits for the next round
    /// instead of leaving.
    pub p_stay: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            city_size: 1.0,
            rider_arrivals: 8,
            driver_arrivals: 8,
            threshold_min: 0.0,
            threshold_max: 0.8,
            p_stay: 0.5,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<(), RideshareError> {
        if !(self.city_size > 0.0 && self.city_size.is_finite()) {
            return Err(RideshareError::InvalidConfig(format!(
                "city_size must be positive, got {}",
                self.city_size
            )));
        }
        if !(0.0..=1.0).contains(&self.p_stay) || self.p_stay.is_nan() {
            return Err(RideshareError::InvalidConfig(format!(
                "p_stay must lie in [0, 1], got {}",
                self.p_stay
            )));
        }
        if !(self.threshold_min >= 0.0 && self.threshold_max >= self.threshold_min) {
            return Err(RideshareError::InvalidConfig(format!(
                "threshold range [{}, {}) is invalid",
                self.threshold_min, self.threshold_max
            )));
        }
        Ok(())
    }

    fn sample_rider(&self, id: u64, rng: &mut impl Rng) -> Rider {
        let location = self.sample_point(rng);
        let destination = self.sample_point(rng);
        let span = self.threshold_max - self.threshold_min;
        Rider {
            id,
            location,
            destination,
            acceptance_threshold: self.threshold_min + rng.random::<f64>() * span,
        }
    }

    fn sample_driver(&self, id: u64, rng: &mut impl Rng) -> Driver {
        Driver { id, location: self.sample_point(rng) }
    }

    fn sample_point(&self, rng: &mut impl Rng) -> Point {
        Point {
            x: rng.random::<f64>() * self.city_size,
            y: rng.random::<f64>() * self.city_size,
        }
    }
}

/// Rider utility for a driver: `1 / (1 + distance)`. Strictly decreasing in
/// pickup distance, 1 when co-located, and always positive.
pub fn utility(rider: &Rider, driver: &Driver) -> f64 {
    1.0 / (1.0 + rider.location.distance(&driver.location))
}

/// One matching round's problem: rider/driver populations and the full
/// utility matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingInstance {
    riders: Vec<Rider>,
    drivers: Vec<Driver>,
    /// Row-major `riders x drivers`.
    utilities: Vec<f64>,
    next_rider_id: u64,
    next_driver_id: u64,
}

impl MatchingInstance {
    /// Builds an instance from explicit populations, computing utilities via
    /// [`utility`].
    pub fn from_population(riders: Vec<Rider>, drivers: Vec<Driver>) -> Self {
        let utilities = riders
            .iter()
            .flat_map(|r| drivers.iter().map(move |d| utility(r, d)))
            .collect();
        let next_rider_id = riders.iter().map(|r| r.id + 1).max().unwrap_or(0);
        let next_driver_id = drivers.iter().map(|d| d.id + 1).max().unwrap_or(0);
        Self { riders, drivers, utilities, next_rider_id, next_driver_id }
    }

    /// Builds an instance with an explicit utility matrix (row-major
    /// `riders x drivers`); entries must be finite and nonnegative.
    pub fn with_utilities(riders: Vec<Rider>, drivers: Vec<Driver>, utilities: Vec<f64>) -> Self {
        assert_eq!(utilities.len(), riders.len() * drivers.len(), "matrix shape mismatch");
        assert!(utilities.iter().all(|u| u.is_finite() && *u >= 0.0));
        let next_rider_id = riders.iter().map(|r| r.id + 1).max().unwrap_or(0);
        let next_driver_id = drivers.iter().map(|d| d.id + 1).max().unwrap_or(0);
        Self { riders, drivers, utilities, next_rider_id, next_driver_id }
    }

    pub fn riders(&self) -> &[Rider] {
        &self.riders
    }

    pub fn drivers(&self) -> &[Driver] {
        &self.drivers
    }

    pub fn num_riders(&self) -> usize {
        self.riders.len()
    }

    pub fn num_drivers(&self) -> usize {
        self.drivers.len()
    }

    pub fn utility_at(&self, rider_idx: usize, driver_idx: usize) -> f64 {
        self.utilities[rider_idx * self.drivers.len() + driver_idx]
    }
}

/// A one-to-one partial assignment of riders to drivers, stored as
/// `(rider_index, driver_index)` pairs sorted by rider.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingSolution {
    pairs: Vec<(usize, usize)>,
}

impl MatchingSolution {
    /// Validates index bounds and injectivity on both sides.
    pub fn new(mut pairs: Vec<(usize, usize)>, instance: &MatchingInstance) -> Self {
        pairs.sort_unstable();
        let mut rider_seen = vec![false; instance.num_riders()];
        let mut driver_seen = vec![false; instance.num_drivers()];
        for &(r, d) in &pairs {
            assert!(r < instance.num_riders() && d < instance.num_drivers(), "index out of bounds");
            assert!(!rider_seen[r], "rider {r} matched twice");
            assert!(!driver_seen[d], "driver {d} matched twice");
            rider_seen[r] = true;
            driver_seen[d] = true;
        }
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Sum of rider utilities over the assignment.
    pub fn total_utility(&self, instance: &MatchingInstance) -> f64 {
        self.pairs.iter().map(|&(r, d)| instance.utility_at(r, d)).sum()
    }
}

/// Samples a fresh market: riders and drivers placed uniformly in the city,
/// utilities computed for every pair. Riders are drawn before drivers, each
/// in ascending id order.
pub fn build_instance(
    config: &MarketConfig,
    num_riders: u32,
    num_drivers: u32,
    rng: &mut impl Rng,
) -> Result<MatchingInstance, RideshareError> {
    config.validate()?;
    let riders = (0..u64::from(num_riders)).map(|id| config.sample_rider(id, rng)).collect();
    let drivers = (0..u64::from(num_drivers)).map(|id| config.sample_driver(id, rng)).collect();
    Ok(MatchingInstance::from_population(riders, drivers))
}

/// The benchmark: a uniformly random one-to-one pairing of
/// `min(riders, drivers)` pairs.
pub fn benchmark_match(instance: &MatchingInstance, rng: &mut impl Rng) -> MatchingSolution {
    let mut rider_order: Vec<usize> = (0..instance.num_riders()).collect();
    let mut driver_order: Vec<usize> = (0..instance.num_drivers()).collect();
    rider_order.shuffle(rng);
    driver_order.shuffle(rng);
    let pairs = rider_order.into_iter().zip(driver_order).collect();
    MatchingSolution::new(pairs, instance)
}

/// Improvement attempts a skill-1 matcher would spend per utility-matrix cell;
/// intermediate skills get a proportional share.
const SWAP_BUDGET_PER_CELL: usize = 8;

/// A matcher's heuristic solution.
///
/// Skill 1 produces the exact maximum-utility assignment. Skill 0 matches
/// greedily (nearest available driver) in a random rider order. Intermediate
/// skills start from greedy and apply a skill-proportional number of randomly
/// proposed improving 2-swaps, so expected total utility rises with skill.
pub fn heuristic_match(
    instance: &MatchingInstance,
    skill: f64,
    rng: &mut impl Rng,
) -> MatchingSolution {
    assert!((0.0..=1.0).contains(&skill), "skill out of range: {skill}");
    if skill >= 1.0 {
        let pairs = optimal_assignment(
            &instance.utilities,
            instance.num_riders(),
            instance.num_drivers(),
        );
        return MatchingSolution::new(pairs, instance);
    }

    // Greedy base: random rider order, nearest available driver each.
    let mut rider_order: Vec<usize> = (0..instance.num_riders()).collect();
    rider_order.shuffle(rng);
    let mut driver_free = vec![true; instance.num_drivers()];
    let mut pairs: Vec<(usize, usize)> =
        Vec::with_capacity(instance.num_riders().min(instance.num_drivers()));
    for &r in &rider_order {
        let mut pick: Option<(usize, f64)> = None;
        for d in 0..instance.num_drivers() {
            if driver_free[d] {
                let u = instance.utility_at(r, d);
                if pick.map_or(true, |(_, best)| u > best) {
                    pick = Some((d, u));
                }
            }
        }
        if let Some((d, _)) = pick {
            driver_free[d] = false;
            pairs.push((r, d));
        }
    }

    // Skill-proportional local improvement.
    let budget = (skill
        * (SWAP_BUDGET_PER_CELL * instance.num_riders() * instance.num_drivers()) as f64)
        as usize;
    let mut free_drivers: Vec<usize> =
        (0..instance.num_drivers()).filter(|&d| driver_free[d]).collect();
    let mut matched_riders = vec![false; instance.num_riders()];
    for &(r, _) in &pairs {
        matched_riders[r] = true;
    }
    let mut free_riders: Vec<usize> =
        (0..instance.num_riders()).filter(|&r| !matched_riders[r]).collect();

    for _ in 0..budget {
        if pairs.is_empty() {
            break;
        }
        // Three move kinds: swap two pairs' drivers, pull in a free driver,
        // or hand a pair's driver to a free rider.
        let mut kinds: Vec<u8> = Vec::with_capacity(3);
        if pairs.len() >= 2 {
            kinds.push(0);
        }
        if !free_drivers.is_empty() {
            kinds.push(1);
        }
        if !free_riders.is_empty() {
            kinds.push(2);
        }
        if kinds.is_empty() {
            break;
        }
        match kinds[rng.random_range(0..kinds.len())] {
            0 => {
                let i = rng.random_range(0..pairs.len());
                let mut j = rng.random_range(0..pairs.len() - 1);
                if j >= i {
                    j += 1;
                }
                let (r1, d1) = pairs[i];
                let (r2, d2) = pairs[j];
                let gain = instance.utility_at(r1, d2) + instance.utility_at(r2, d1)
                    - instance.utility_at(r1, d1)
                    - instance.utility_at(r2, d2);
                if gain > 0.0 {
                    pairs[i] = (r1, d2);
                    pairs[j] = (r2, d1);
                }
            }
            1 => {
                let i = rng.random_range(0..pairs.len());
                let f = rng.random_range(0..free_drivers.len());
                let (r, d) = pairs[i];
                let candidate = free_drivers[f];
                if instance.utility_at(r, candidate) > instance.utility_at(r, d) {
                    pairs[i] = (r, candidate);
                    free_drivers[f] = d;
                }
            }
            _ => {
                let i = rng.random_range(0..pairs.len());
                let f = rng.random_range(0..free_riders.len());
                let (r, d) = pairs[i];
                let candidate = free_riders[f];
                if instance.utility_at(candidate, d) > instance.utility_at(r, d) {
                    pairs[i] = (candidate, d);
                    free_riders[f] = r;
                }
            }
        }
    }

    MatchingSolution::new(pairs, instance)
}

/// Total Utility Gain of a solution against the benchmark pairing, delegating
/// the normalized floor-at-zero form to the consensus layer.
pub fn rideshare_tug(
    instance: &MatchingInstance,
    solution: &MatchingSolution,
    benchmark: &MatchingSolution,
) -> Result<f64, RideshareError> {
    let total = solution.total_utility(instance);
    let base = benchmark.total_utility(instance);
    consensus::tug_from_utilities(total, base).map_err(|e| match e {
        ConsensusError::NonPositiveBenchmark(_) => RideshareError::DegenerateBenchmark,
        other => unreachable!("unexpected TUG error: {other}"),
    })
}

/// Evaluates every matched rider's private constraint against the proposed
/// match: rider `i` accepts iff their utility meets their threshold. Returns
/// the accepted pairs and the acceptance rate (1 when nobody was matched:
/// no evidence of rejection).
pub fn rider_responses(
    instance: &MatchingInstance,
    winning_solution: &MatchingSolution,
) -> (Vec<(usize, usize)>, f64) {
    let matched = winning_solution.len();
    if matched == 0 {
        return (Vec::new(), 1.0);
    }
    let accepted: Vec<(usize, usize)> = winning_solution
        .pairs()
        .iter()
        .copied()
        .filter(|&(r, d)| instance.utility_at(r, d) >= instance.riders[r].acceptance_threshold)
        .collect();
    let rate = accepted.len() as f64 / matched as f64;
    (accepted, rate)
}

/// Rolls the market forward one round: accepted riders leave with their
/// drivers, matched-but-rejecting riders stay with probability `p_stay`,
/// unmatched participants stay, and fresh arrivals join. Stay decisions are
/// drawn in ascending rider-index order, then rider arrivals, then driver
/// arrivals.
pub fn advance_market(
    instance: &MatchingInstance,
    winning_solution: &MatchingSolution,
    accepted: &[(usize, usize)],
    config: &MarketConfig,
    rng: &mut impl Rng,
) -> MatchingInstance {
    debug_assert!(accepted.iter().all(|p| winning_solution.pairs().contains(p)));
    let mut rider_leaves = vec![false; instance.num_riders()];
    let mut driver_leaves = vec![false; instance.num_drivers()];
    for &(r, d) in accepted {
        rider_leaves[r] = true;
        driver_leaves[d] = true;
    }
    for &(r, _) in winning_solution.pairs() {
        if !rider_leaves[r] && rng.random::<f64>() >= config.p_stay {
            rider_leaves[r] = true;
        }
    }

    let mut riders: Vec<Rider> = instance
        .riders
        .iter()
        .enumerate()
        .filter(|(i, _)| !rider_leaves[*i])
        .map(|(_, r)| r.clone())
        .collect();
    let mut drivers: Vec<Driver> = instance
        .drivers
        .iter()
        .enumerate()
        .filter(|(i, _)| !driver_leaves[*i])
        .map(|(_, d)| d.clone())
        .collect();

    let mut next_rider_id = instance.next_rider_id;
    let mut next_driver_id = instance.next_driver_id;
    for _ in 0..config.rider_arrivals {
        riders.push(config.sample_rider(next_rider_id, rng));
        next_rider_id += 1;
    }
    for _ in 0..config.driver_arrivals {
        drivers.push(config.sample_driver(next_driver_id, rng));
        next_driver_id += 1;
    }

    let mut next = MatchingInstance::from_population(riders, drivers);
    next.next_rider_id = next_rider_id;
    next.next_driver_id = next_driver_id;
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn rider_at(id: u64, x: f64, y: f64) -> Rider {
        Rider {
            id,
            location: Point { x, y },
            destination: Point { x: 0.5, y: 0.5 },
            acceptance_threshold: 0.0,
        }
    }

    fn driver_at(id: u64, x: f64, y: f64) -> Driver {
        Driver { id, location: Point { x, y } }
    }

    #[test]
    fn utility_decreases_with_distance() {
        let r = rider_at(0, 0.0, 0.0);
        assert_eq!(utility(&r, &driver_at(0, 0.0, 0.0)), 1.0);
        assert_eq!(utility(&r, &driver_at(1, 1.0, 0.0)), 0.5);
        let near = utility(&r, &driver_at(2, 0.2, 0.0));
        let far = utility(&r, &driver_at(3, 0.7, 0.0));
        assert!(near > far);
    }

    #[test]
    fn build_instance_shapes_and_determinism() {
        let cfg = MarketConfig::default();
        let empty = build_instance(&cfg, 0, 5, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(empty.num_riders(), 0);
        assert_eq!(empty.num_drivers(), 5);

        let square = build_instance(&cfg, 3, 3, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(square.utilities.len(), 9);

        let again = build_instance(&cfg, 3, 3, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(square, again);
    }

    #[test]
    fn benchmark_is_injective_with_min_cardinality() {
        let cfg = MarketConfig::default();
        let mut rng = stream_rng(2, 0);
        let one = build_instance(&cfg, 1, 1, &mut rng).unwrap();
        assert_eq!(benchmark_match(&one, &mut rng).len(), 1);

        let none = build_instance(&cfg, 0, 4, &mut rng).unwrap();
        assert!(benchmark_match(&none, &mut rng).is_empty());

        let rect = build_instance(&cfg, 3, 2, &mut rng).unwrap();
        let b = benchmark_match(&rect, &mut rng);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn full_skill_solves_the_two_by_two_instance_exactly() {
        let riders = vec![rider_at(0, 0.0, 0.0), rider_at(1, 1.0, 1.0)];
        let drivers = vec![driver_at(0, 0.0, 0.0), driver_at(1, 1.0, 1.0)];
        let instance =
            MatchingInstance::with_utilities(riders, drivers, vec![0.9, 0.1, 0.2, 0.8]);
        let sol = heuristic_match(&instance, 1.0, &mut stream_rng(3, 0));
        assert_eq!(sol.pairs(), &[(0, 0), (1, 1)]);
        assert!((sol.total_utility(&instance) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn any_skill_matches_the_single_pair() {
        let cfg = MarketConfig::default();
        let mut rng = stream_rng(4, 0);
        let instance = build_instance(&cfg, 1, 1, &mut rng).unwrap();
        for skill in [0.0, 0.5, 1.0] {
            assert_eq!(heuristic_match(&instance, skill, &mut rng).len(), 1);
        }
    }

    #[test]
    fn skill_one_dominates_skill_zero_on_random_instances() {
        let cfg = MarketConfig::default();
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let r = rng.random_range(1..=6);
            let d = rng.random_range(1..=6);
            let instance = build_instance(&cfg, r, d, &mut rng).unwrap();
            let top = heuristic_match(&instance, 1.0, &mut rng).total_utility(&instance);
            let low = heuristic_match(&instance, 0.0, &mut rng).total_utility(&instance);
            assert!(top >= low - 1e-12, "optimal {top} below greedy {low}");
        }
    }

    #[test]
    fn expected_total_utility_rises_with_skill() {
        let cfg = MarketConfig::default();
        let mut rng = stream_rng(10, 0);
        let mut means = [0.0_f64; 3];
        let trials = 300;
        for _ in 0..trials {
            let instance = build_instance(&cfg, 6, 6, &mut rng).unwrap();
            for (slot, skill) in [0.0, 0.5, 1.0].into_iter().enumerate() {
                means[slot] +=
                    heuristic_match(&instance, skill, &mut rng).total_utility(&instance);
            }
        }
        for m in &mut means {
            *m /= f64::from(trials);
        }
        assert!(means[1] >= means[0], "mid skill {:.4} below greedy {:.4}", means[1], means[0]);
        assert!(means[2] >= means[1], "optimal {:.4} below mid skill {:.4}", means[2], means[1]);
    }

    #[test]
    fn tug_compares_solution_to_benchmark() {
        let riders = vec![rider_at(0, 0.0, 0.0), rider_at(1, 1.0, 1.0)];
        let drivers = vec![driver_at(0, 0.0, 0.0), driver_at(1, 1.0, 1.0)];
        let instance =
            MatchingInstance::with_utilities(riders, drivers, vec![0.9, 0.1, 0.2, 0.8]);
        let good = MatchingSolution::new(vec![(0, 0), (1, 1)], &instance);
        let bad = MatchingSolution::new(vec![(0, 1), (1, 0)], &instance);

        assert_eq!(rideshare_tug(&instance, &good, &good).unwrap(), 0.0);
        // 1.7 vs 0.3: (1.7 - 0.3) / 0.3
        let tug = rideshare_tug(&instance, &good, &bad).unwrap();
        assert!((tug - 14.0 / 3.0).abs() < 1e-12);
        // Worse than benchmark floors at zero.
        assert_eq!(rideshare_tug(&instance, &bad, &good).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_benchmark_is_an_error() {
        let instance = MatchingInstance::from_population(vec![rider_at(0, 0.1, 0.1)], vec![]);
        let empty = MatchingSolution::new(vec![], &instance);
        assert_eq!(
            rideshare_tug(&instance, &empty, &empty),
            Err(RideshareError::DegenerateBenchmark)
        );
    }

    #[test]
    fn rider_responses_threshold_extremes() {
        let mut riders = vec![rider_at(0, 0.0, 0.0), rider_at(1, 1.0, 1.0)];
        let drivers = vec![driver_at(0, 0.1, 0.0), driver_at(1, 0.9, 1.0)];
        let instance = MatchingInstance::from_population(riders.clone(), drivers.clone());
        let solution = MatchingSolution::new(vec![(0, 0), (1, 1)], &instance);

        let (accepted, rate) = rider_responses(&instance, &solution);
        assert_eq!(accepted.len(), 2);
        assert_eq!(rate, 1.0);

        for r in &mut riders {
            r.acceptance_threshold = 2.0; // above any achievable utility
        }
        let instance = MatchingInstance::from_population(riders, drivers);
        let (accepted, rate) = rider_responses(&instance, &solution);
        assert!(accepted.is_empty());
        assert_eq!(rate, 0.0);

        let lonely = MatchingInstance::from_population(vec![rider_at(0, 0.0, 0.0)], vec![]);
        let nothing = MatchingSolution::new(vec![], &lonely);
        assert_eq!(rider_responses(&lonely, &nothing).1, 1.0);
    }

    #[test]
    fn acceptance_rate_concentrates_when_utilities_beat_thresholds() {
        // Thresholds on [0, 0.5), utilities clustered near 1: acceptance stays
        // within Monte-Carlo distance of 1.
        let cfg = MarketConfig {
            city_size: 0.05,
            threshold_min: 0.0,
            threshold_max: 0.5,
            ..MarketConfig::default()
        };
        let mut rng = stream_rng(6, 0);
        let mut matched = 0u32;
        let mut accepted = 0u32;
        for _ in 0..1_000 {
            let instance = build_instance(&cfg, 10, 10, &mut rng).unwrap();
            let solution = heuristic_match(&instance, 1.0, &mut rng);
            let (acc, _) = rider_responses(&instance, &solution);
            matched += solution.len() as u32;
            accepted += acc.len() as u32;
        }
        let alpha = f64::from(accepted) / f64::from(matched);
        assert!((alpha - 1.0).abs() <= 0.02, "alpha = {alpha}");
    }

    #[test]
    fn advance_market_removal_rules() {
        let cfg = MarketConfig {
            rider_arrivals: 0,
            driver_arrivals: 0,
            ..MarketConfig::default()
        };
        let mut rng = stream_rng(7, 0);
        let instance = build_instance(&cfg, 4, 4, &mut rng).unwrap();
        let solution = heuristic_match(&instance, 1.0, &mut rng);

        // Everyone accepts, nobody arrives: the market empties.
        let accepted = solution.pairs().to_vec();
        let next = advance_market(&instance, &solution, &accepted, &cfg, &mut rng);
        assert_eq!(next.num_riders(), 0);
        assert_eq!(next.num_drivers(), 0);

        // Nobody accepts and everyone waits: population unchanged.
        let sticky = MarketConfig { p_stay: 1.0, ..cfg.clone() };
        let next = advance_market(&instance, &solution, &[], &sticky, &mut rng);
        assert_eq!(next.num_riders(), 4);
        assert_eq!(next.num_drivers(), 4);
        assert_eq!(next.riders(), instance.riders());
    }

    #[test]
    fn stationary_population_under_balanced_arrivals() {
        // All riders accept (threshold 0), so departures per round equal
        // min(riders, drivers); arrivals replace them one for one.
        let cfg = MarketConfig {
            rider_arrivals: 10,
            driver_arrivals: 10,
            threshold_min: 0.0,
            threshold_max: 0.0,
            ..MarketConfig::default()
        };
        let mut rng = stream_rng(8, 0);
        let mut instance = build_instance(&cfg, 10, 10, &mut rng).unwrap();
        let mut sizes = Vec::new();
        for _ in 0..1_000 {
            let solution = heuristic_match(&instance, 1.0, &mut rng);
            let (accepted, _) = rider_responses(&instance, &solution);
            instance = advance_market(&instance, &solution, &accepted, &cfg, &mut rng);
            sizes.push(instance.num_riders() as f64);
        }
        let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
        assert!((mean - 10.0).abs() <= 1.0, "mean rider population {mean}");
    }

    #[test]
    fn arrivals_get_fresh_ids() {
        let cfg = MarketConfig { rider_arrivals: 2, driver_arrivals: 1, ..MarketConfig::default() };
        let mut rng = stream_rng(9, 0);
        let instance = build_instance(&cfg, 2, 2, &mut rng).unwrap();
        let solution = heuristic_match(&instance, 1.0, &mut rng);
        let accepted = solution.pairs().to_vec();
        let next = advance_market(&instance, &solution, &accepted, &cfg, &mut rng);
        let ids: Vec<u64> = next.riders().iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![2, 3], "new riders continue the id sequence");
        assert_eq!(next.drivers()[0].id, 2);
    }
}
