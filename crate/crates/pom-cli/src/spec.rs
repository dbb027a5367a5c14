//! Experiment specification: defaults, config-file keys, and flag overrides.
//!
//! Every field can be set in a TOML config file and overridden by the
//! command-line flag of the same name. Precedence: built-in defaults, then
//! the config file, then flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use pom::harness::EpochConfig;
use pom::rideshare::{MarketConfig, RideScenario};

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub rounds: u32,
    pub matchers: u32,
    pub lower_bound: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub qc: u32,
    pub seed: u64,
    pub epochs: u32,
    pub out: PathBuf,
    pub lambda_grid: Vec<f64>,
    pub lower_bound_grid: Vec<f64>,
    pub beta: Vec<f64>,
    pub equ_min: f64,
    pub ine_max: f64,
    pub riders: u32,
    pub drivers: u32,
    pub rider_arrivals: u32,
    pub driver_arrivals: u32,
    pub skills: Vec<f64>,
    pub threshold_min: f64,
    pub threshold_max: f64,
    pub p_stay: f64,
    pub city_size: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            rounds: 1500,
            matchers: 100,
            lower_bound: 0.7,
            lambda: 0.5,
            alpha: 0.8,
            qc: 100,
            seed: 0,
            epochs: 500,
            out: PathBuf::from("pom-out"),
            lambda_grid: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            lower_bound_grid: vec![0.9, 0.7, 0.5, 0.3],
            beta: (1..=9).map(|i| f64::from(i) / 10.0).collect(),
            equ_min: 15.0,
            ine_max: 0.025,
            riders: 20,
            drivers: 20,
            rider_arrivals: 8,
            driver_arrivals: 8,
            skills: vec![1.0, 0.75, 0.5, 0.25, 0.0],
            threshold_min: 0.0,
            threshold_max: 0.8,
            p_stay: 0.5,
            city_size: 1.0,
        }
    }
}

/// The config-file shape: every key optional, names identical to the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rounds: Option<u32>,
    pub matchers: Option<u32>,
    pub lower_bound: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub qc: Option<u32>,
    pub seed: Option<u64>,
    pub epochs: Option<u32>,
    pub out: Option<PathBuf>,
    pub lambda_grid: Option<Vec<f64>>,
    pub lower_bound_grid: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub equ_min: Option<f64>,
    pub ine_max: Option<f64>,
    pub riders: Option<u32>,
    pub drivers: Option<u32>,
    pub rider_arrivals: Option<u32>,
    pub driver_arrivals: Option<u32>,
    pub skills: Option<Vec<f64>>,
    pub threshold_min: Option<f64>,
    pub threshold_max: Option<f64>,
    pub p_stay: Option<f64>,
    pub city_size: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

macro_rules! merge {
    ($spec:expr, $layer:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(value) = $layer.$field {
            $spec.$field = value;
        })+
    };
}

impl ExperimentSpec {
    /// Defaults, overlaid by the config file, overlaid by flags.
    pub fn resolve(file: FileConfig, flags: FileConfig) -> Self {
        let mut spec = Self::default();
        for layer in [file, flags] {
            merge!(
                spec, layer, rounds, matchers, lower_bound, lambda, alpha, qc, seed, epochs,
                out, lambda_grid, lower_bound_grid, beta, equ_min, ine_max, riders, drivers,
                rider_arrivals, driver_arrivals, skills, threshold_min, threshold_max, p_stay,
                city_size,
            );
        }
        spec
    }

    pub fn epoch_config(&self) -> EpochConfig {
        EpochConfig {
            total_rounds: self.rounds,
            num_solvers: self.matchers,
            capability_lower_bound: self.lower_bound,
            lambda: self.lambda,
            acceptance_rate: self.alpha,
            quit_checkpoint: self.qc,
            seed: self.seed,
        }
    }

    pub fn market_config(&self) -> MarketConfig {
        MarketConfig {
            city_size: self.city_size,
            rider_arrivals: self.rider_arrivals,
            driver_arrivals: self.driver_arrivals,
            threshold_min: self.threshold_min,
            threshold_max: self.threshold_max,
            p_stay: self.p_stay,
        }
    }

    pub fn ride_scenario(&self) -> RideScenario {
        RideScenario {
            rounds: self.rounds,
            initial_riders: self.riders,
            initial_drivers: self.drivers,
            market: self.market_config(),
            matcher_skills: self.skills.clone(),
            lambda: self.lambda,
            quit_checkpoint: self.qc,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_overrides_defaults() {
        let file: FileConfig = toml::from_str("lambda = 0.2\nepochs = 10\nseed = 7").unwrap();
        let flags = FileConfig { lambda: Some(0.9), ..FileConfig::default() };
        let spec = ExperimentSpec::resolve(file, flags);
        assert_eq!(spec.lambda, 0.9);
        assert_eq!(spec.epochs, 10);
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.rounds, 1500);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("no_such_key = 1").is_err());
    }

    #[test]
    fn default_grids_cover_both_anchors() {
        let spec = ExperimentSpec::default();
        assert_eq!(spec.lambda_grid.first(), Some(&0.0));
        assert_eq!(spec.lambda_grid.last(), Some(&1.0));
        assert_eq!(spec.lambda_grid.len(), 11);
        assert_eq!(spec.beta.len(), 9);
    }
}
