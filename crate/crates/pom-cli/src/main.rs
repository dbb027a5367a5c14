//! Batch front-end for the PoM simulator.
//!
//! Subcommands: `simulate` (multi-epoch experiment at one parameter point),
//! `sweep` (grid over capability lower bounds and lambda, plus the normalized
//! tradeoff curve), `choose-dcp` (constrained designer choice over a sweep),
//! and `ride-demo` (end-to-end matching market with a hash-chained ledger).
//! Every run with a fixed seed produces byte-identical output files. Progress
//! and warnings go to stderr; data goes to files only.

mod output;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context};
use clap::{Args, Parser, Subcommand};

use pom::dcp::{choose_dcp, DesignerPreferences, SweepPoint};
use pom::harness::{run_experiment, EpochConfig};
use pom::ledger::{Chain, ChainStatus};
use pom::metrics::{normalize_roc, SweepSummary};
use pom::rideshare::run_ride_demo;

use output::SweepRow;
use spec::{ExperimentSpec, FileConfig};

#[derive(Parser)]
#[command(name = "pom", version, about = "Proof-of-Merit consensus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Run one multi-epoch experiment and write epochs.csv / summary.csv
    Simulate,
    /// Sweep the (lower_bound, lambda) grid; write sweep.csv and roc.csv
    Sweep,
    /// Pick the designer's lambda per (lower_bound, beta); write choice.csv
    ChooseDcp {
        /// Reuse an existing sweep.csv instead of simulating inline
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Run the live matching-market demo; write ride_rounds.csv and chain.log
    RideDemo,
}

/// Every spec field, overridable after the subcommand.
#[derive(Args)]
struct Overrides {
    /// TOML config file holding the same keys as these flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rounds per epoch
    #[arg(long, global = true)]
    rounds: Option<u32>,
    /// Initial number of matchers
    #[arg(long, global = true)]
    matchers: Option<u32>,
    /// Capability distribution lower bound L of U(L, 1)
    #[arg(long, global = true)]
    lower_bound: Option<f64>,
    /// Decentralization control parameter
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Exogenous acceptance rate
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Quit checkpoint (rounds without a win before exit)
    #[arg(long, global = true)]
    qc: Option<u32>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Epochs per experiment
    #[arg(long, global = true)]
    epochs: Option<u32>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated lambda grid for sweeps
    #[arg(long, global = true, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Comma-separated lower-bound grid for sweeps
    #[arg(long, global = true, value_delimiter = ',')]
    lower_bound_grid: Option<Vec<f64>>,
    /// Comma-separated designer weights
    #[arg(long, global = true, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Minimum acceptable steady-state matcher count
    #[arg(long, global = true)]
    equ_min: Option<f64>,
    /// Maximum acceptable steady-state inefficiency
    #[arg(long, global = true)]
    ine_max: Option<f64>,
    /// Initial riders in the demo market
    #[arg(long, global = true)]
    riders: Option<u32>,
    /// Initial drivers in the demo market
    #[arg(long, global = true)]
    drivers: Option<u32>,
    /// Rider arrivals per round
    #[arg(long, global = true)]
    rider_arrivals: Option<u32>,
    /// Driver arrivals per round
    #[arg(long, global = true)]
    driver_arrivals: Option<u32>,
    /// Comma-separated matcher skills (one matcher each)
    #[arg(long, global = true, value_delimiter = ',')]
    skills: Option<Vec<f64>>,
    /// Rider threshold range lower edge
    #[arg(long, global = true)]
    threshold_min: Option<f64>,
    /// Rider threshold range upper edge
    #[arg(long, global = true)]
    threshold_max: Option<f64>,
    /// Probability a rejecting rider waits for the next round
    #[arg(long, global = true)]
    p_stay: Option<f64>,
    /// Side length of the square city
    #[arg(long, global = true)]
    city_size: Option<f64>,
}

impl Overrides {
    fn into_layer(self) -> FileConfig {
        FileConfig {
            rounds: self.rounds,
            matchers: self.matchers,
            lower_bound: self.lower_bound,
            lambda: self.lambda,
            alpha: self.alpha,
            qc: self.qc,
            seed: self.seed,
            epochs: self.epochs,
            out: self.out,
            lambda_grid: self.lambda_grid,
            lower_bound_grid: self.lower_bound_grid,
            beta: self.beta,
            equ_min: self.equ_min,
            ine_max: self.ine_max,
            riders: self.riders,
            drivers: self.drivers,
            rider_arrivals: self.rider_arrivals,
            driver_arrivals: self.driver_arrivals,
            skills: self.skills,
            threshold_min: self.threshold_min,
            threshold_max: self.threshold_max,
            p_stay: self.p_stay,
            city_size: self.city_size,
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file = match &cli.overrides.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let spec = ExperimentSpec::resolve(file, cli.overrides.into_layer());
    fs::create_dir_all(&spec.out)
        .with_context(|| format!("creating output directory {}", spec.out.display()))?;

    match cli.command {
        Command::Simulate => cmd_simulate(&spec),
        Command::Sweep => cmd_sweep(&spec),
        Command::ChooseDcp { sweep } => cmd_choose_dcp(&spec, sweep.as_deref()),
        Command::RideDemo => cmd_ride_demo(&spec),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(spec: &ExperimentSpec) -> anyhow::Result<()> {
    let result = run_experiment(&spec.epoch_config(), spec.epochs)?;
    if result.aggregate.non_converged_epochs > 0 {
        eprintln!(
            "warning: {} of {} epochs did not converge (tail shorter than the minimum)",
            result.aggregate.non_converged_epochs, result.aggregate.epochs
        );
    }
    write_file(&spec.out, "epochs.csv", &output::render_epochs_csv(&result))?;
    write_file(&spec.out, "summary.csv", &output::render_summary_csv(&result.aggregate))?;
    Ok(())
}

fn compute_sweep(spec: &ExperimentSpec) -> anyhow::Result<Vec<SweepRow>> {
    ensure!(!spec.lambda_grid.is_empty(), "lambda grid must be nonempty");
    ensure!(!spec.lower_bound_grid.is_empty(), "lower-bound grid must be nonempty");
    let mut rows = Vec::new();
    for &lower_bound in &spec.lower_bound_grid {
        for &lambda in &spec.lambda_grid {
            let config = EpochConfig {
                capability_lower_bound: lower_bound,
                lambda,
                ..spec.epoch_config()
            };
            eprintln!(
                "sweep: L={lower_bound} lambda={lambda} ({} epochs)",
                spec.epochs
            );
            let result = run_experiment(&config, spec.epochs).with_context(|| {
                format!("sweep cell L={lower_bound} lambda={lambda}")
            })?;
            if result.aggregate.non_converged_epochs > 0 {
                eprintln!(
                    "warning: L={lower_bound} lambda={lambda}: {} non-converged epochs",
                    result.aggregate.non_converged_epochs
                );
            }
            rows.push(SweepRow {
                lower_bound,
                lambda,
                mean_inefficiency: result.aggregate.mean_inefficiency,
                std_inefficiency: result.aggregate.std_inefficiency,
                mean_equity: result.aggregate.mean_equity,
                mean_convergence_round: result.aggregate.mean_convergence_round,
                mean_gini: result.aggregate.mean_gini,
            });
        }
    }
    Ok(rows)
}

/// Rows of one lower bound, in sweep order.
fn rows_for(rows: &[SweepRow], lower_bound: f64) -> Vec<SweepRow> {
    rows.iter().copied().filter(|r| r.lower_bound == lower_bound).collect()
}

fn cmd_sweep(spec: &ExperimentSpec) -> anyhow::Result<()> {
    let rows = compute_sweep(spec)?;
    write_file(&spec.out, "sweep.csv", &output::render_sweep_csv(&rows))?;

    let mut roc = Vec::new();
    for &lower_bound in &spec.lower_bound_grid {
        let summaries: Vec<SweepSummary> = rows_for(&rows, lower_bound)
            .iter()
            .map(|r| SweepSummary {
                lambda: r.lambda,
                mean_inefficiency: r.mean_inefficiency,
                mean_equity: r.mean_equity,
            })
            .collect();
        let points = normalize_roc(&summaries)
            .with_context(|| format!("normalizing tradeoff curve at L={lower_bound}"))?;
        roc.push((lower_bound, points));
    }
    write_file(&spec.out, "roc.csv", &output::render_roc_csv(&roc))?;
    Ok(())
}

fn cmd_choose_dcp(spec: &ExperimentSpec, sweep_path: Option<&Path>) -> anyhow::Result<()> {
    let rows = match sweep_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading sweep file {}", path.display()))?;
            output::parse_sweep_csv(&text)?
        }
        None => compute_sweep(spec)?,
    };

    let lower_bounds: Vec<f64> = {
        let mut seen = Vec::new();
        for r in &rows {
            if !seen.contains(&r.lower_bound) {
                seen.push(r.lower_bound);
            }
        }
        seen
    };

    let mut choice_rows = Vec::new();
    for lower_bound in lower_bounds {
        let points: Vec<SweepPoint> = rows_for(&rows, lower_bound)
            .iter()
            .map(|r| SweepPoint {
                lambda: r.lambda,
                mean_equity: r.mean_equity,
                mean_inefficiency: r.mean_inefficiency,
            })
            .collect();
        for &beta in &spec.beta {
            let prefs = DesignerPreferences::new(beta, spec.equ_min, spec.ine_max)?;
            let choice = choose_dcp(&points, &prefs)
                .with_context(|| format!("choosing lambda at L={lower_bound} beta={beta}"))?;
            let feasible: Vec<String> = points
                .iter()
                .filter(|p| p.is_feasible(&prefs))
                .map(|p| p.lambda.to_string())
                .collect();
            choice_rows.push((lower_bound, beta, choice, feasible.join(";")));
        }
    }
    write_file(&spec.out, "choice.csv", &output::render_choice_csv(&choice_rows))?;
    Ok(())
}

fn cmd_ride_demo(spec: &ExperimentSpec) -> anyhow::Result<()> {
    let result = run_ride_demo(&spec.ride_scenario())?;
    write_file(&spec.out, "ride_rounds.csv", &output::render_ride_rounds_csv(&result.rounds))?;

    let mut chain_log = Vec::new();
    result.chain.export(&mut chain_log)?;
    write_file(&spec.out, "chain.log", std::str::from_utf8(&chain_log)?)?;

    // The exported file must verify on re-import.
    let restored = Chain::import(chain_log.as_slice())?;
    match restored.verify() {
        ChainStatus::Valid => Ok(()),
        ChainStatus::FirstInvalid(height) => {
            anyhow::bail!("exported chain failed verification at height {height}")
        }
    }
}
