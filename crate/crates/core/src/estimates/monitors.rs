//! Boundedness verdicts operationalized as stabilization: a quantity is
//! accepted as bounded when it does not grow past its early-time extremum by
//! more than [`SLACK`].

use serde::Serialize;

use super::MonitorRecord;
use crate::homothety::{coefficient, ExactKind};
use crate::maflow::{Frame, ModelSpec, Trajectory};
use crate::{Error, Result};

pub const SLACK: f64 = 0.01;

/// Outcome of one monitor.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Verdict {
    pub name: String,
    /// The estimate the monitor mirrors.
    pub anchor: String,
    pub passed: bool,
    /// Distance from failure; negative on failure.
    pub margin: f64,
}

impl Verdict {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, margin: f64) -> Self {
        Self { name: name.into(), anchor: anchor.into(), passed: margin >= 0.0, margin }
    }
}

/// `max over [t_end/2, t_end] ≤ max over [0, t_end/2] + slack`; returns the margin.
pub fn no_late_growth(samples: &[(f64, f64)]) -> f64 {
    let Some(t_end) = samples.last().map(|p| p.0) else { return 0.0 };
    let half = 0.5 * t_end;
    let early = samples.iter().filter(|p| p.0 <= half).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let late = samples.iter().filter(|p| p.0 >= half).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    early + SLACK - late
}

/// `value(t) ≤ max_{t ≤ early_end} value + slack` at every sample.
pub fn stays_below_early_max(samples: &[(f64, f64)], early_end: f64) -> f64 {
    let early = samples.iter().filter(|p| p.0 <= early_end).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    samples.iter().map(|p| early + SLACK - p.1).fold(f64::INFINITY, f64::min)
}

/// `value(t) ≥ min_{t ≤ early_end} value − slack` at every sample.
pub fn stays_above_early_min(samples: &[(f64, f64)], early_end: f64) -> f64 {
    let early = samples.iter().filter(|p| p.0 <= early_end).map(|p| p.1).fold(f64::INFINITY, f64::min);
    samples.iter().map(|p| p.1 - (early - SLACK)).fold(f64::INFINITY, f64::min)
}

fn series(records: &[MonitorRecord], f: impl Fn(&MonitorRecord) -> Option<f64>) -> Option<Vec<(f64, f64)>> {
    let out: Vec<(f64, f64)> = records.iter().filter_map(|r| f(r).map(|v| (r.t, v))).collect();
    (out.len() == records.len() && !out.is_empty()).then_some(out)
}

/// Stabilization verdicts for a normalized trajectory. Monitors whose inputs
/// are absent are skipped.
pub fn monitor_suite(records: &[MonitorRecord]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut push = |name: &str, anchor: &str, margin: Option<f64>| {
        if let Some(m) = margin {
            out.push(Verdict::new(name, anchor, m));
        }
    };
    let bounds = "potential and velocity bounds";
    // Same transient as `no_late_growth`; the barrier keeps the fixed window [0, 2].
    let half = 0.5 * records.last().map_or(0.0, |r| r.t);
    push("phidot_sup below early max", bounds, series(records, |r| r.phidot_sup).map(|s| stays_below_early_max(&s, half)));
    push("phidot_inf above early min", bounds, series(records, |r| r.phidot_inf).map(|s| stays_above_early_min(&s, half)));
    push(
        "sup |phi| below early max",
        bounds,
        series(records, |r| Some(r.phi_sup?.abs().max(r.phi_inf?.abs()))).map(|s| stays_below_early_max(&s, half)),
    );
    push("barrier inf above early min", "volume barrier", series(records, |r| r.m_vol_inf).map(|s| stays_above_early_min(&s, 2.0)));
    push("H_grad no late growth", "gradient estimate", series(records, |r| r.h_grad_sup).map(|s| no_late_growth(&s)));
    push("K no late growth", "gradient estimate", series(records, |r| r.k_sup).map(|s| no_late_growth(&s)));
    push("H_schwarz no late growth", "Schwarz estimate", series(records, |r| r.h_schwarz_sup).map(|s| no_late_growth(&s)));
    push("R_inf above early min", "curvature lower bound", series(records, |r| Some(r.r_inf)).map(|s| stays_above_early_min(&s, half)));
    push("sup |R| no late growth", "curvature bound", series(records, |r| Some(r.sup_abs_r())).map(|s| no_late_growth(&s)));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwarzReport {
    pub min_slack: f64,
    pub samples: usize,
}

/// Checks `d/dt tr_ω χ ≤ tr_ω χ + C (tr_ω χ)²` with `C = 0` at every record
/// of a trajectory on a model whose trace is spatially constant.
///
/// The left side follows from the coefficient ODEs; the right side is read
/// from the records.
pub fn schwarz_inequality_check(traj: &Trajectory, model: &ModelSpec) -> Result<SchwarzReport> {
    if model.kappa() == 0 {
        return Err(Error::InvalidModel("the Schwarz inequality needs a negative Kähler-Einstein factor".into()));
    }
    let mut min_slack = f64::INFINITY;
    for r in &traj.records {
        let clock = r.clock();
        let lhs: f64 = model
            .exact_factors()
            .iter()
            .filter(|f| f.0 == ExactKind::NegativeKe)
            .map(|&(kind, d, a0)| {
                let a = coefficient(kind, a0, clock, traj.frame);
                let rate = match traj.frame {
                    Frame::Normalized => 1.0 - a,
                    Frame::Unnormalized => 1.0,
                };
                -(d as f64) * rate / (a * a)
            })
            .sum();
        let slack = r.trace_chi_sup - lhs;
        if !(slack >= 0.0) {
            return Err(Error::InequalityViolation { t: r.t, slack });
        }
        min_slack = min_slack.min(slack);
    }
    Ok(SchwarzReport { min_slack, samples: traj.records.len() })
}
