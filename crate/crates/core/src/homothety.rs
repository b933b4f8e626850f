//! Exact reductions of homothety factors.
//!
//! On a factor carrying a metric `a·g_KE` with `Ric(g_KE) = −g_KE` the flow
//! stays homothetic and reduces to a linear ODE for `a`; the same holds for a
//! Ricci-flat factor `b·g_flat`. Products of such factors with one torus factor
//! give split models whose exact parts are never gridded.

use serde::{Deserialize, Serialize};

use crate::geometry::ScalarField;
use crate::maflow::{self, FlowConfig, Frame, Integrator, ModelSpec, TorusFactor};
use crate::{Error, Result};

/// Kind of an exact factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactKind {
    /// Flat factor, `χ = 0` there.
    RicciFlat,
    /// Negative Kähler-Einstein factor, `χ = g_KE` there.
    NegativeKe,
}

#[derive(Clone, Debug)]
pub enum FactorSpec {
    Exact { kind: ExactKind, dim: usize, a0: f64 },
    TorusPde(Box<TorusFactor>),
}

impl FactorSpec {
    pub fn ricci_flat(dim: usize, b0: f64) -> Self {
        Self::Exact { kind: ExactKind::RicciFlat, dim, a0: b0 }
    }

    pub fn negative_ke(dim: usize, a0: f64) -> Self {
        Self::Exact { kind: ExactKind::NegativeKe, dim, a0 }
    }

    pub fn torus(factor: TorusFactor) -> Self {
        Self::TorusPde(Box::new(factor))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Exact { dim, .. } => *dim,
            Self::TorusPde(t) => t.dim(),
        }
    }
}

/// Closed-form coefficient of one exact factor.
///
/// Normalized clock: `a(t) = 1 + (a0 − 1)e^{-t}`, `b(t) = b0 e^{-t}`.
/// Unnormalized clock: `a(s) = a0 + s`, `b(s) = b0`.
pub fn coefficient(kind: ExactKind, a0: f64, clock: f64, frame: Frame) -> f64 {
    match (frame, kind) {
        (Frame::Normalized, ExactKind::NegativeKe) => 1.0 + (a0 - 1.0) * (-clock).exp(),
        (Frame::Normalized, ExactKind::RicciFlat) => a0 * (-clock).exp(),
        (Frame::Unnormalized, ExactKind::NegativeKe) => a0 + clock,
        (Frame::Unnormalized, ExactKind::RicciFlat) => a0,
    }
}

/// Coefficients of every exact factor, in declaration order.
pub fn exact_coefficients(clock: f64, factors: &[FactorSpec], frame: Frame) -> Vec<f64> {
    factors
        .iter()
        .filter_map(|f| match f {
            FactorSpec::Exact { kind, a0, .. } => Some(coefficient(*kind, *a0, clock, frame)),
            _ => None,
        })
        .collect()
}

/// Scalar curvature contribution of one exact factor: `−d/a` on a negative
/// KE factor, zero on a flat one.
pub fn scalar_contribution(kind: ExactKind, dim: usize, a: f64) -> f64 {
    match kind {
        ExactKind::NegativeKe => -(dim as f64) / a,
        ExactKind::RicciFlat => 0.0,
    }
}

/// `tr_ω χ` contribution of one exact factor.
pub fn trace_contribution(kind: ExactKind, dim: usize, a: f64) -> f64 {
    match kind {
        ExactKind::NegativeKe => dim as f64 / a,
        ExactKind::RicciFlat => 0.0,
    }
}

/// Scalar curvature of a product: a spatially constant exact part plus the
/// torus field when there is one.
#[derive(Clone, Debug)]
pub struct ScalarTotal {
    pub constant: f64,
    pub field: Option<ScalarField>,
}

impl ScalarTotal {
    pub fn sup(&self) -> f64 {
        self.constant + self.field.as_ref().map_or(0.0, ScalarField::sup)
    }

    pub fn inf(&self) -> f64 {
        self.constant + self.field.as_ref().map_or(0.0, ScalarField::inf)
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup().abs().max(self.inf().abs())
    }
}

pub fn scalar_total(clock: f64, factors: &[FactorSpec], frame: Frame, torus_field: Option<&ScalarField>) -> ScalarTotal {
    let constant = factors
        .iter()
        .filter_map(|f| match f {
            FactorSpec::Exact { kind, dim, a0 } => {
                Some(scalar_contribution(*kind, *dim, coefficient(*kind, *a0, clock, frame)))
            }
            _ => None,
        })
        .sum();
    ScalarTotal { constant, field: torus_field.cloned() }
}

/// Outcome of the lower-bound sharpness check for `(1+s)|R̃(s)|`.
#[derive(Clone, Debug, Serialize)]
pub struct OptimalityReport {
    /// `min_s (1+s) max|R̃(s)|`.
    pub lower: f64,
    /// `max_s (1+s) max|R̃(s)|`.
    pub upper: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Samples `m(s) = (1+s) max|R̃(s)|` on a log-spaced grid of `s ∈ [0, s_max]`
/// for an exact-only model on the unnormalized clock.
pub fn optimality_check(factors: &[FactorSpec], s_max: f64) -> Result<OptimalityReport> {
    if factors.iter().any(|f| matches!(f, FactorSpec::TorusPde(_))) {
        return Err(Error::InvalidModel("optimality check needs an exact-only model".into()));
    }
    if !factors.iter().any(|f| matches!(f, FactorSpec::Exact { kind: ExactKind::NegativeKe, .. })) {
        return Err(Error::InvalidModel("optimality check needs a negative Kähler-Einstein factor".into()));
    }
    if !(s_max.is_finite() && s_max > 0.0) {
        return Err(Error::Domain { value: s_max, domain: "s_max > 0" });
    }
    const COUNT: usize = 241;
    let top = s_max.ln_1p();
    let mut samples = Vec::with_capacity(COUNT);
    for i in 0..COUNT {
        let s = if i + 1 == COUNT { s_max } else { (top * i as f64 / (COUNT - 1) as f64).exp_m1() };
        let r = scalar_total(s, factors, Frame::Unnormalized, None).sup_abs();
        samples.push((s, (1.0 + s) * r));
    }
    let lower = samples.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let upper = samples.iter().map(|p| p.1).fold(0.0, f64::max);
    let worst = samples.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((0.0, 0.0));
    if !(lower > 0.0) || lower < 1e-6 * upper {
        return Err(Error::OptimalityFailure { s: worst.0, value: worst.1 });
    }
    Ok(OptimalityReport { lower, upper, samples })
}

#[derive(Clone, Debug, Serialize)]
pub struct OdeReport {
    pub max_error: f64,
    pub samples: usize,
}

/// Integrates the coefficient ODEs with the flow integrator and compares every
/// sample against the closed forms.
pub fn ode_vs_closed_form(factors: &[FactorSpec], t_end: f64, frame: Frame) -> Result<OdeReport> {
    const TOLERANCE: f64 = 1e-10;
    if factors.iter().any(|f| matches!(f, FactorSpec::TorusPde(_))) {
        return Err(Error::InvalidModel("closed forms exist only for exact factors".into()));
    }
    let model = ModelSpec::new(factors.to_vec())?;
    let config = FlowConfig {
        frame,
        t_end,
        tolerance: 1e-13,
        sample_interval: t_end / 40.0,
        integrator: Integrator::Rk4,
        ..FlowConfig::default()
    };
    let mut max_error = 0.0_f64;
    let mut samples = 0;
    maflow::evolve(&model, &config, |state| {
        let exact = exact_coefficients(state.clock(), factors, frame);
        for (a, b) in state.coefficients().iter().zip(&exact) {
            max_error = max_error.max((a - b).abs());
        }
        samples += 1;
        Ok(())
    })?;
    if max_error > TOLERANCE {
        return Err(Error::ToleranceExceeded { error: max_error, tolerance: TOLERANCE });
    }
    Ok(OdeReport { max_error, samples })
}
