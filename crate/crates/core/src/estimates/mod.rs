//! The Ricci potential `u = φ̇ + φ`, the trace of the canonical form and the
//! maximum-principle functionals, packaged as [`MonitorRecord`]s.

mod monitors;

use serde::{Deserialize, Serialize};

pub use monitors::{
    monitor_suite, no_late_growth, schwarz_inequality_check, stays_above_early_min, stays_below_early_max,
    SchwarzReport, Verdict, SLACK,
};

use crate::elliptic::Interpolant;
use crate::geometry::{gradient_norm_with_inverse, laplacian_with_inverse, scalar_curvature_perturbed, ScalarField};
use crate::homothety::{scalar_contribution, trace_contribution};
use crate::maflow::{flow_rhs, Fault, FlowState, Frame, ModelSpec};
use crate::{reduce, Result};

/// A quantity on a product: a torus field plus a spatially constant part
/// carried by the exact factors.
#[derive(Clone, Debug)]
pub struct SplitField {
    pub field: Option<ScalarField>,
    pub constant: f64,
}

impl SplitField {
    pub fn sup(&self) -> f64 {
        self.constant + self.field.as_ref().map_or(0.0, ScalarField::sup)
    }

    pub fn inf(&self) -> f64 {
        self.constant + self.field.as_ref().map_or(0.0, ScalarField::inf)
    }
}

/// One time sample of every monitored quantity.
///
/// Potential-level columns are `None` where they are undefined, e.g. after a
/// frame change. `positivity_margin` is the least eigenvalue of `e^t g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub s: Option<f64>,
    pub phi_sup: Option<f64>,
    pub phi_inf: Option<f64>,
    pub phidot_sup: Option<f64>,
    pub phidot_inf: Option<f64>,
    pub u_sup: Option<f64>,
    pub u_inf: Option<f64>,
    pub trace_chi_sup: f64,
    pub grad_u_sup: f64,
    pub neg_lap_u_sup: f64,
    pub r_sup: f64,
    pub r_inf: f64,
    /// `sup|R_from_u − R_direct|`.
    pub r_gap: f64,
    pub h_grad_sup: Option<f64>,
    pub k_sup: Option<f64>,
    pub h_schwarz_sup: Option<f64>,
    pub m_vol_inf: Option<f64>,
    pub positivity_margin: f64,
    pub a_used: Option<f64>,
}

/// Column names after `t` (and `s`), in output order.
pub const COLUMNS: [&str; 18] = [
    "phi_sup",
    "phi_inf",
    "phidot_sup",
    "phidot_inf",
    "u_sup",
    "u_inf",
    "trace_chi_sup",
    "grad_u_sup",
    "neg_lap_u_sup",
    "r_sup",
    "r_inf",
    "r_gap",
    "h_grad_sup",
    "k_sup",
    "h_schwarz_sup",
    "m_vol_inf",
    "positivity_margin",
    "a_used",
];

impl MonitorRecord {
    /// Integration clock of the record.
    pub fn clock(&self) -> f64 {
        self.s.unwrap_or(self.t)
    }

    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 18] {
        [
            self.phi_sup,
            self.phi_inf,
            self.phidot_sup,
            self.phidot_inf,
            self.u_sup,
            self.u_inf,
            Some(self.trace_chi_sup),
            Some(self.grad_u_sup),
            Some(self.neg_lap_u_sup),
            Some(self.r_sup),
            Some(self.r_inf),
            Some(self.r_gap),
            self.h_grad_sup,
            self.k_sup,
            self.h_schwarz_sup,
            self.m_vol_inf,
            Some(self.positivity_margin),
            self.a_used,
        ]
    }

    /// Inverse of [`MonitorRecord::values`]; required columns must be present.
    pub fn from_values(t: f64, s: Option<f64>, v: &[Option<f64>; 18]) -> Option<Self> {
        Some(Self {
            t,
            s,
            phi_sup: v[0],
            phi_inf: v[1],
            phidot_sup: v[2],
            phidot_inf: v[3],
            u_sup: v[4],
            u_inf: v[5],
            trace_chi_sup: v[6]?,
            grad_u_sup: v[7]?,
            neg_lap_u_sup: v[8]?,
            r_sup: v[9]?,
            r_inf: v[10]?,
            r_gap: v[11]?,
            h_grad_sup: v[12],
            k_sup: v[13],
            h_schwarz_sup: v[14],
            m_vol_inf: v[15],
            positivity_margin: v[16]?,
            a_used: v[17],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.s.map_or(true, f64::is_finite) && self.values().iter().flatten().all(|v| v.is_finite())
    }

    pub fn sup_abs_r(&self) -> f64 {
        self.r_sup.abs().max(self.r_inf.abs())
    }
}

fn velocity(state: &FlowState, model: &ModelSpec) -> Result<crate::maflow::Rates> {
    match state.rates() {
        Some(r) => Ok(r.clone()),
        None => flow_rhs(state, model),
    }
}

/// `u = φ̇ + φ` on the normalized flow and `u = φ̃_s` on the unnormalized
/// one, i.e. `log(e^{(n−κ)t} ω^n / Ω)` in the frame of the state.
pub fn u_field(state: &FlowState, model: &ModelSpec) -> Result<SplitField> {
    let rates = velocity(state, model)?;
    let field = match (rates.field, state.oscillation()) {
        (Some(v), Some(osc)) => Some(match state.frame() {
            Frame::Normalized => v.axpy(1.0, osc)?,
            Frame::Unnormalized => v,
        }),
        _ => None,
    };
    let constant = match state.frame() {
        Frame::Normalized => (rates.field_mean + state.mean()) + (rates.exact_potential + state.exact_potential()),
        Frame::Unnormalized => rates.field_mean + rates.exact_potential,
    };
    Ok(SplitField { field, constant })
}

/// `A = ⌊sup u⌋ + 2`, so that `A − u ≥ 1`.
pub fn choose_a(u: &SplitField) -> f64 {
    choose_a_from_sup(u.sup())
}

pub fn choose_a_from_sup(sup_u: f64) -> f64 {
    sup_u.floor() + 2.0
}

/// `tr_ω χ`: zero on a torus factor, `d/a` on each negative KE factor.
pub fn trace_chi(state: &FlowState, model: &ModelSpec) -> SplitField {
    let value: f64 = model
        .exact_factors()
        .iter()
        .zip(state.coefficients())
        .map(|(&(kind, d, _), &a)| trace_contribution(kind, d, a))
        .sum();
    let constant = match model.fault() {
        Some(Fault::FlipChiTrace) => -value,
        None => value,
    };
    SplitField { field: None, constant }
}

/// `R = −Δu − tr_ω χ`.
pub fn scalar_from_u(state: &FlowState, model: &ModelSpec) -> Result<SplitField> {
    let u = u_field(state, model)?;
    let tr = trace_chi(state, model);
    let field = match (&u.field, state.torus_metric(model)?) {
        (Some(u), Some(g)) => Some(laplacian_with_inverse(u, &g.inverse_blocks()?)?.scaled(-1.0)),
        _ => None,
    };
    Ok(SplitField { field, constant: -tr.constant })
}

fn exact_scalar(state: &FlowState, model: &ModelSpec) -> f64 {
    model
        .exact_factors()
        .iter()
        .zip(state.coefficients())
        .map(|(&(kind, d, _), &a)| scalar_contribution(kind, d, a))
        .sum()
}

/// Evaluates every functional at one state.
///
/// `M = φ̇ + 2φ − Φ` needs the interpolant `Φ`; the Schwarz functional
/// `log tr_ω χ − Aφ` needs `tr_ω χ > 0`; `H = |∇u|²/(A−u) + tr_ω χ` and
/// `K = −Δu/(A−u) + 4|∇u|²/(A−u)`.
pub fn functional_suite(
    state: &FlowState,
    model: &ModelSpec,
    a: f64,
    phi_cmp: Option<&Interpolant>,
) -> Result<MonitorRecord> {
    let rates = velocity(state, model)?;
    let u = u_field(state, model)?;
    let tr = trace_chi(state, model).constant;
    let r_exact = exact_scalar(state, model);
    let phi_c = state.exact_potential() + state.mean();
    let phidot_c = rates.exact_potential + rates.field_mean;

    let (phi_sup, phi_inf, phidot_sup, phidot_inf);
    let (grad_sup, neg_lap_sup, r_sup, r_inf, r_gap, h_sup, k_sup, m_inf);
    match (state.torus_metric(model)?, state.oscillation(), &u.field, &rates.field) {
        (Some(g), Some(phi), Some(uf), Some(vf)) => {
            let inverse = g.inverse_blocks()?;
            let lap = laplacian_with_inverse(uf, &inverse)?;
            let grad = gradient_norm_with_inverse(uf, &inverse)?;
            let (base, pert) = state.torus_metric_parts(model)?.expect("torus state");
            let direct = scalar_curvature_perturbed(&base, &pert)?;
            let r_scalex: Vec<f64> = lap.values().iter().map(|l| -l - tr).collect();
            let gap: Vec<f64> =
                r_scalex.iter().zip(direct.values()).map(|(x, y)| (x - (y + r_exact)).abs()).collect();
            let weight: Vec<f64> = uf.values().iter().map(|v| 1.0 / (a - (v + u.constant))).collect();
            let h: Vec<f64> = grad.values().iter().zip(&weight).map(|(g2, w)| g2 * w + tr).collect();
            let k: Vec<f64> = lap
                .values()
                .iter()
                .zip(grad.values())
                .zip(&weight)
                .map(|((l, g2), w)| -l * w + 4.0 * g2 * w)
                .collect();
            phi_sup = phi.sup() + phi_c;
            phi_inf = phi.inf() + phi_c;
            phidot_sup = vf.sup() + phidot_c;
            phidot_inf = vf.inf() + phidot_c;
            grad_sup = grad.sup();
            neg_lap_sup = -lap.inf();
            r_sup = reduce::sup(&r_scalex);
            r_inf = reduce::inf(&r_scalex);
            r_gap = reduce::sup(&gap);
            h_sup = reduce::sup(&h);
            k_sup = reduce::sup(&k);
            m_inf = match phi_cmp {
                Some(p) => {
                    let m: Vec<f64> = vf
                        .values()
                        .iter()
                        .zip(phi.values())
                        .zip(p.field.values())
                        .map(|((v, f), c)| v + 2.0 * f - c)
                        .collect();
                    Some(reduce::inf(&m) + (phidot_c + 2.0 * phi_c - p.constant))
                }
                None => None,
            };
        }
        _ => {
            phi_sup = phi_c;
            phi_inf = phi_c;
            phidot_sup = phidot_c;
            phidot_inf = phidot_c;
            grad_sup = 0.0;
            neg_lap_sup = 0.0;
            r_sup = -tr;
            r_inf = -tr;
            r_gap = (-tr - r_exact).abs();
            h_sup = tr;
            k_sup = 0.0;
            m_inf = phi_cmp.map(|p| phidot_c + 2.0 * phi_c - p.constant);
        }
    }
    let h_schwarz = if tr > 0.0 { Some(tr.ln() - a * if a >= 0.0 { phi_inf } else { phi_sup }) } else { None };
    let record = MonitorRecord {
        t: state.t(),
        s: match state.frame() {
            Frame::Normalized => None,
            Frame::Unnormalized => Some(state.s()),
        },
        phi_sup: Some(phi_sup),
        phi_inf: Some(phi_inf),
        phidot_sup: Some(phidot_sup),
        phidot_inf: Some(phidot_inf),
        u_sup: Some(u.sup()),
        u_inf: Some(u.inf()),
        trace_chi_sup: tr,
        grad_u_sup: grad_sup,
        neg_lap_u_sup: neg_lap_sup,
        r_sup,
        r_inf,
        r_gap,
        h_grad_sup: Some(h_sup),
        k_sup: Some(k_sup),
        h_schwarz_sup: h_schwarz,
        m_vol_inf: m_inf,
        positivity_margin: state.scale_free_margin(model)?,
        a_used: Some(a),
    };
    if !record.is_finite() {
        return Err(crate::Error::NonFinite { what: "monitor record", index: 0 });
    }
    Ok(record)
}

#[cfg(test)]
mod tests;
