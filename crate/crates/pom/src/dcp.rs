//! The system designer's constrained choice of the decentralization control
//! parameter.
//!
//! Given a lambda sweep of mean steady-state equity and inefficiency, the
//! designer maximizes a Cobb-Douglas objective over the feasible grid points:
//! equity normalized between its lambda = 0 and lambda = 1 values, weighted
//! `beta`, times inefficiency headroom normalized the same way, weighted
//! `1 - beta`. Feasibility demands a minimum equity and a maximum
//! inefficiency.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DcpError {
    #[error("designer weight beta must lie strictly inside (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("constraint bound must be nonnegative and finite, got {0}")]
    InvalidBound(f64),
    #[error("sweep is missing the lambda = {0} anchor point")]
    MissingAnchor(f64),
    #[error("sweep anchors coincide; the objective normalization is undefined")]
    DegenerateAnchors,
}

/// Designer preferences: equity weight and the two constraint bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignerPreferences {
    beta: f64,
    equ_min: f64,
    ine_max: f64,
}

impl DesignerPreferences {
    pub fn new(beta: f64, equ_min: f64, ine_max: f64) -> Result<Self, DcpError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(DcpError::InvalidBeta(beta));
        }
        for bound in [equ_min, ine_max] {
            if !(bound >= 0.0 && bound.is_finite()) {
                return Err(DcpError::InvalidBound(bound));
            }
        }
        Ok(Self { beta, equ_min, ine_max })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn equ_min(&self) -> f64 {
        self.equ_min
    }

    pub fn ine_max(&self) -> f64 {
        self.ine_max
    }
}

/// One lambda grid point of the aggregated sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub mean_equity: f64,
    pub mean_inefficiency: f64,
}

impl SweepPoint {
    /// Minimum-equity and maximum-inefficiency constraints, plus the lambda
    /// range itself.
    pub fn is_feasible(&self, prefs: &DesignerPreferences) -> bool {
        self.mean_equity >= prefs.equ_min
            && self.mean_inefficiency <= prefs.ine_max
            && (0.0..=1.0).contains(&self.lambda)
    }
}

/// Values of equity and inefficiency at the lambda = 0 and lambda = 1 anchors,
/// which normalize the objective's two factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationAnchors {
    pub equity_at_zero: f64,
    pub equity_at_one: f64,
    pub inefficiency_at_zero: f64,
    pub inefficiency_at_one: f64,
}

const LAMBDA_MATCH_EPS: f64 = 1e-9;

impl NormalizationAnchors {
    pub fn from_sweep(sweep: &[SweepPoint]) -> Result<Self, DcpError> {
        let at = |target: f64| -> Result<&SweepPoint, DcpError> {
            sweep
                .iter()
                .find(|p| (p.lambda - target).abs() <= LAMBDA_MATCH_EPS)
                .ok_or(DcpError::MissingAnchor(target))
        };
        let zero = at(0.0)?;
        let one = at(1.0)?;
        let anchors = Self {
            equity_at_zero: zero.mean_equity,
            equity_at_one: one.mean_equity,
            inefficiency_at_zero: zero.mean_inefficiency,
            inefficiency_at_one: one.mean_inefficiency,
        };
        if anchors.equity_at_one == anchors.equity_at_zero
            || anchors.inefficiency_at_one == anchors.inefficiency_at_zero
        {
            return Err(DcpError::DegenerateAnchors);
        }
        Ok(anchors)
    }
}

/// Cobb-Douglas designer objective in `[0, 1]`.
///
/// Both normalized factors are clamped into `[0, 1]` before exponentiation:
/// Monte-Carlo noise can push a grid point marginally past its anchor, and a
/// fractional power of a small negative value is undefined.
pub fn objective(
    point: &SweepPoint,
    anchors: &NormalizationAnchors,
    beta: f64,
) -> Result<f64, DcpError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(DcpError::InvalidBeta(beta));
    }
    let equ_span = anchors.equity_at_one - anchors.equity_at_zero;
    let ine_span = anchors.inefficiency_at_one - anchors.inefficiency_at_zero;
    if equ_span == 0.0 || ine_span == 0.0 {
        return Err(DcpError::DegenerateAnchors);
    }
    let equity_gain = ((point.mean_equity - anchors.equity_at_zero) / equ_span).clamp(0.0, 1.0);
    let efficiency_headroom =
        ((anchors.inefficiency_at_one - point.mean_inefficiency) / ine_span).clamp(0.0, 1.0);
    Ok(equity_gain.powf(beta) * efficiency_headroom.powf(1.0 - beta))
}

/// Result of the constrained choice: either the maximizing grid point or a
/// marker that no point satisfies the constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcpChoice {
    Selected { lambda: f64, objective: f64 },
    Infeasible,
}

/// Picks the feasible lambda maximizing the objective; ties break toward the
/// smaller lambda. The sweep must cover both anchors (lambda 0 and 1).
pub fn choose_dcp(
    sweep: &[SweepPoint],
    prefs: &DesignerPreferences,
) -> Result<DcpChoice, DcpError> {
    assert!(!sweep.is_empty(), "choose_dcp requires a nonempty sweep");
    let anchors = NormalizationAnchors::from_sweep(sweep)?;
    let mut best: Option<(f64, f64)> = None;
    for point in sweep.iter().filter(|p| p.is_feasible(prefs)) {
        let value = objective(point, &anchors, prefs.beta())?;
        best = match best {
            None => Some((point.lambda, value)),
            Some((lambda, obj)) => {
                if value > obj || (value == obj && point.lambda < lambda) {
                    Some((point.lambda, value))
                } else {
                    Some((lambda, obj))
                }
            }
        };
    }
    Ok(match best {
        Some((lambda, objective)) => DcpChoice::Selected { lambda, objective },
        None => DcpChoice::Infeasible,
    })
}
