//! CSV rendering and parsing. Column orders are fixed; floats are printed
//! with Rust's shortest round-trip formatting so files are byte-stable and
//! parse back to the exact values.

use anyhow::{bail, Context};

use pom::dcp::DcpChoice;
use pom::harness::{AggregateStats, ExperimentResult};
use pom::metrics::RocPoint;
use pom::rideshare::RideRoundRecord;

/// One aggregated sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lower_bound: f64,
    pub lambda: f64,
    pub mean_inefficiency: f64,
    pub std_inefficiency: f64,
    pub mean_equity: f64,
    pub mean_convergence_round: f64,
    pub mean_gini: f64,
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn render_epochs_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("epoch,steady_state_round,converged,equity,inefficiency,gini\n");
    for r in &result.records {
        let ine = opt(r.report.as_ref().map(|m| m.inefficiency));
        let gini = opt(r.report.as_ref().map(|m| m.gini));
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.epoch, r.steady_state_round, r.converged, r.equity, ine, gini
        ));
    }
    out
}

pub fn render_summary_csv(stats: &AggregateStats) -> String {
    let mut out = String::from(
        "epochs,converged_epochs,non_converged,mean_inefficiency,std_inefficiency,\
         mean_equity,std_equity,mean_gini,std_gini,mean_convergence_round,std_convergence_round\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        stats.epochs,
        stats.converged_epochs,
        stats.non_converged_epochs,
        stats.mean_inefficiency,
        stats.std_inefficiency,
        stats.mean_equity,
        stats.std_equity,
        stats.mean_gini,
        stats.std_gini,
        stats.mean_convergence_round,
        stats.std_convergence_round,
    ));
    out
}

pub const SWEEP_HEADER: &str =
    "lower_bound,lambda,mean_inefficiency,std_inefficiency,mean_equity,mean_convergence_round,mean_gini";

pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.lower_bound,
            r.lambda,
            r.mean_inefficiency,
            r.std_inefficiency,
            r.mean_equity,
            r.mean_convergence_round,
            r.mean_gini,
        ));
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> anyhow::Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == SWEEP_HEADER => {}
        other => bail!("unexpected sweep header: {other:?}"),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("sweep line {} has {} fields, expected 7", i + 2, fields.len());
        }
        let parse = |j: usize| -> anyhow::Result<f64> {
            fields[j]
                .parse()
                .with_context(|| format!("sweep line {}, column {}", i + 2, j + 1))
        };
        rows.push(SweepRow {
            lower_bound: parse(0)?,
            lambda: parse(1)?,
            mean_inefficiency: parse(2)?,
            std_inefficiency: parse(3)?,
            mean_equity: parse(4)?,
            mean_convergence_round: parse(5)?,
            mean_gini: parse(6)?,
        });
    }
    Ok(rows)
}

pub fn render_roc_csv(per_lower: &[(f64, Vec<RocPoint>)]) -> String {
    let mut out = String::from("lower_bound,lambda,inefficiency_norm,equity_norm\n");
    for (lower, points) in per_lower {
        for p in points {
            out.push_str(&format!("{},{},{},{}\n", lower, p.lambda, p.inefficiency, p.equity));
        }
    }
    out
}

/// One choice row per (L, beta). Infeasible rows leave the choice columns
/// empty.
pub fn render_choice_csv(rows: &[(f64, f64, DcpChoice, String)]) -> String {
    let mut out = String::from("lower_bound,beta,lambda_star,objective,feasible_set\n");
    for (lower, beta, choice, feasible_set) in rows {
        let (lambda_star, objective) = match choice {
            DcpChoice::Selected { lambda, objective } => {
                (lambda.to_string(), objective.to_string())
            }
            DcpChoice::Infeasible => (String::new(), String::new()),
        };
        out.push_str(&format!("{lower},{beta},{lambda_star},{objective},{feasible_set}\n"));
    }
    out
}

pub fn render_ride_rounds_csv(records: &[RideRoundRecord]) -> String {
    let mut out = String::from(
        "round,riders,drivers,matched,accepted,acceptance_rate,winner,best,winner_tug,best_tug,quits\n",
    );
    for r in records {
        let quits = if r.quit_ids.is_empty() {
            "-".to_string()
        } else {
            r.quit_ids.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(";")
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.round,
            r.riders,
            r.drivers,
            r.matched,
            r.accepted,
            r.acceptance_rate,
            r.winner,
            r.best,
            r.winner_tug,
            r.best_tug,
            quits,
        ));
    }
    out
}
