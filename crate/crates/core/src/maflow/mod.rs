//! The potential flow, its integrators, frame rescaling and the volume
//! sandwich check.
//!
//! A torus factor of dimension `d` evolves by
//! `φ̇ = log(e^{dt}(ω_t + i∂∂̄φ)^d / Ω) − φ` with `ω_t = e^{-t}ω_0`; exact
//! factors evolve by their closed-form ODEs.

mod config;
mod integrate;
mod model;
mod state;

use serde::Serialize;

pub use config::{FlowConfig, Integrator};
pub use integrate::{evolve, step, StepRecord, Stepper};
pub use model::{Fault, Frame, ModelSpec, TorusFactor};
pub use state::{flow_rhs, reference_metric, FlowState, Rates, Snapshot};

use crate::elliptic::{build_interpolant, ComparisonFamily, NewtonOptions};
use crate::estimates::{choose_a, functional_suite, u_field, MonitorRecord};
use crate::homothety::{coefficient, ExactKind};
use crate::{reduce, Error, Result};

/// Model and configuration a trajectory was produced from.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub model: String,
    pub config: FlowConfig,
}

/// Step controller totals.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_error_ratio: f64,
}

/// Monitor history of one run.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    /// Clock of the records: `s` is filled in for unnormalized views.
    pub frame: Frame,
    /// True when produced by [`rescale_to_unnormalized`].
    pub rescaled: bool,
    pub records: Vec<MonitorRecord>,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
    pub provenance: Provenance,
    pub stats: RunStats,
}

impl Trajectory {
    /// Records taken strictly after `from` and up to `to`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &MonitorRecord> {
        self.records.iter().filter(move |r| r.clock() >= from && r.clock() <= to)
    }
}

/// Integrates the flow and records every monitor at the sample clocks.
///
/// `A` is chosen from the current `sup u` and never decreases along a run.
/// With the elliptic comparison enabled the barrier `φ̇ + 2φ − Φ` is also
/// recorded.
pub fn run(model: &ModelSpec, config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    let family = if config.elliptic_comparison {
        Some(ComparisonFamily::for_horizon(model, config.t_end, &NewtonOptions::default())?)
    } else {
        None
    };
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut a_used = f64::NEG_INFINITY;
    let outcome = evolve(model, config, |state| {
        let u = u_field(state, model)?;
        a_used = a_used.max(choose_a(&u) + config.a_offset);
        let phi_cmp = match &family {
            Some(f) => Some(build_interpolant(state.t(), f)?),
            None => None,
        };
        records.push(functional_suite(state, model, a_used, phi_cmp.as_ref())?);
        if config.snapshots {
            if let Some(phi) = state.phi() {
                snapshots.push(Snapshot { clock: state.clock(), phi: phi.into_values() });
            }
        }
        Ok(())
    });
    let provenance = Provenance { model: model.summary(), config: config.clone() };
    let make = |records, snapshots, stats| Trajectory {
        frame: config.frame,
        rescaled: false,
        records,
        snapshots,
        provenance: provenance.clone(),
        stats,
    };
    match outcome {
        Ok((_, trail)) => {
            let stats = RunStats {
                accepted_steps: trail.iter().filter(|s| s.accepted).count(),
                rejected_steps: trail.iter().filter(|s| !s.accepted).count(),
                max_error_ratio: trail
                    .iter()
                    .filter(|s| s.accepted)
                    .map(|s| s.error_estimate / config.tolerance)
                    .fold(0.0, f64::max),
            };
            Ok(make(records, snapshots, stats))
        }
        Err(Error::StepFailure { t, dt, reason, .. }) => Err(Error::StepFailure {
            t,
            dt,
            reason,
            partial: Some(Box::new(make(records, snapshots, RunStats::default()))),
        }),
        Err(e) => Err(e),
    }
}

/// Maps a normalized trajectory to the unnormalized frame.
///
/// With `g̃(s) = e^t g(t)` and `s = e^t − 1`, every trace-like quantity
/// (`R`, `tr_ω χ`, `|∇u|²`, `−Δu`) picks up the factor `1/(1+s) = e^{-t}`.
/// Potential-level columns depend on the normalization of the potential and
/// are dropped. The positivity margin is already scale free.
pub fn rescale_to_unnormalized(traj: Trajectory) -> Result<Trajectory> {
    if traj.frame == Frame::Unnormalized {
        return Err(Error::RescaleOnUnnormalized);
    }
    let records = traj
        .records
        .iter()
        .map(|r| {
            let f = (-r.t).exp();
            MonitorRecord {
                t: r.t,
                s: Some(r.t.exp_m1()),
                phi_sup: None,
                phi_inf: None,
                phidot_sup: None,
                phidot_inf: None,
                u_sup: None,
                u_inf: None,
                trace_chi_sup: r.trace_chi_sup * f,
                grad_u_sup: r.grad_u_sup * f,
                neg_lap_u_sup: r.neg_lap_u_sup * f,
                r_sup: r.r_sup * f,
                r_inf: r.r_inf * f,
                r_gap: r.r_gap * f,
                h_grad_sup: None,
                k_sup: None,
                h_schwarz_sup: None,
                m_vol_inf: None,
                positivity_margin: r.positivity_margin,
                a_used: None,
            }
        })
        .collect();
    Ok(Trajectory { frame: Frame::Unnormalized, rescaled: true, records, snapshots: Vec::new(), ..traj })
}

/// Constants observed by [`volume_sandwich_check`].
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// Constant fixed at `t = 0`.
    pub c1: f64,
    /// Smallest constant making the lower inequality hold at every sample.
    pub lower_constant: f64,
    /// Smallest constant making the upper inequality hold at every sample.
    pub upper_constant: f64,
    pub samples: usize,
}

/// `ω_t^n / Ω` pointwise on the product (constant when there is no torus).
fn volume_ratio(model: &ModelSpec, t: f64) -> Result<Vec<f64>> {
    let exact: f64 = model
        .exact_factors()
        .iter()
        .map(|&(kind, d, a0)| coefficient(kind, a0, t, Frame::Normalized).powi(d as i32))
        .product();
    exact_times_torus(model, t, exact)
}

/// `lim_{t→∞} e^{(n−κ)t} ω_t^n / Ω`: negative KE coefficients tend to one and
/// every other factor scales out exactly.
fn upper_limit_ratio(model: &ModelSpec) -> Result<Vec<f64>> {
    let exact: f64 = model
        .exact_factors()
        .iter()
        .map(|&(kind, d, a0)| match kind {
            ExactKind::NegativeKe => 1.0,
            ExactKind::RicciFlat => a0.powi(d as i32),
        })
        .product();
    exact_times_torus(model, 0.0, exact)
}

fn exact_times_torus(model: &ModelSpec, t: f64, exact: f64) -> Result<Vec<f64>> {
    match (model.torus(), reference_metric(t, model)?) {
        (Some(torus), Some(g)) => Ok(g.determinant().iter().map(|v| exact * v / torus.c_omega()).collect()),
        _ => Ok(vec![exact]),
    }
}

/// Checks `C₁⁻¹ e^{−nt} Ω ≤ ω_t^n ≤ C₁ e^{−(n−κ)t} Ω` at every sample time.
///
/// Both rescaled ratios are monotone in `t` factor by factor, so `C₁` is read
/// off at the endpoints `t = 0` and `t → ∞`.
pub fn volume_sandwich_check(model: &ModelSpec, t_samples: &[f64]) -> Result<SandwichReport> {
    let n = model.n() as f64;
    let kappa = model.kappa() as f64;
    let r0 = volume_ratio(model, 0.0)?;
    let c1 = reduce::sup(&r0).max(1.0 / reduce::inf(&r0)).max(reduce::sup(&upper_limit_ratio(model)?));
    let (mut lower_constant, mut upper_constant) = (0.0_f64, 0.0_f64);
    for &t in t_samples {
        let ratio = volume_ratio(model, t)?;
        let lower = (-n * t).exp() / c1;
        let upper = c1 * (-(n - kappa) * t).exp();
        for (index, &v) in ratio.iter().enumerate() {
            if v < lower * (1.0 - 1e-12) || v > upper * (1.0 + 1e-12) {
                return Err(Error::SandwichViolation { t, index, ratio: v, lower, upper });
            }
            lower_constant = lower_constant.max((-n * t).exp() / v);
            upper_constant = upper_constant.max(v * ((n - kappa) * t).exp());
        }
    }
    Ok(SandwichReport { c1, lower_constant, upper_constant, samples: t_samples.len() })
}

/// `sup_{t ≥ 0} tr_ω χ` on the exact factors of a normalized flow.
///
/// Each term `d/(1 + (a₀−1)x)` is convex in `x = e^{-t} ∈ (0, 1]`, so the
/// supremum sits at `t = 0` or in the limit `t → ∞`.
pub fn trace_chi_supremum(model: &ModelSpec) -> f64 {
    let at_zero: f64 = model
        .exact_factors()
        .iter()
        .filter(|f| f.0 == ExactKind::NegativeKe)
        .map(|&(_, d, a0)| d as f64 / a0)
        .sum();
    at_zero.max(model.kappa() as f64)
}

#[cfg(test)]
mod tests;
