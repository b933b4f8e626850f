use serde::{Deserialize, Serialize};

use super::model::{Frame, ModelSpec};
use crate::geometry::{complex_hessian, log_det_deviation, log_det_ratio, MetricField, ScalarField};
use crate::reduce;
use crate::homothety::ExactKind;
use crate::{Error, Result};

/// Time derivatives of every component of a [`FlowState`].
///
/// The torus velocity is split into a zero-mean, dealiased oscillation and
/// its spatial mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub field: Option<ScalarField>,
    pub field_mean: f64,
    pub coefficients: Vec<f64>,
    pub exact_potential: f64,
}

impl Rates {
    /// Full torus velocity `φ̇`.
    pub fn torus_velocity(&self) -> Option<ScalarField> {
        self.field.as_ref().map(|f| f.shifted(self.field_mean))
    }
}

/// Snapshot of the flow at one clock value.
///
/// The integration clock is `t` on the normalized flow and `s = e^t − 1` on
/// the unnormalized one; [`FlowState::t`] always reports the normalized clock.
///
/// The torus potential is held as a zero-mean band-limited oscillation plus
/// its mean, so rounding stays relative to the spatial variation even when
/// the mean dominates.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub(crate) frame: Frame,
    pub(crate) clock: f64,
    pub(crate) oscillation: Option<ScalarField>,
    pub(crate) mean: f64,
    pub(crate) coefficients: Vec<f64>,
    /// Spatially constant potential carried by the exact factors.
    pub(crate) exact_potential: f64,
    pub(crate) rates: Option<Rates>,
}

impl FlowState {
    /// Initial data; the torus potential is projected onto the dealiased band.
    pub fn initial(model: &ModelSpec, frame: Frame) -> Self {
        let (oscillation, mean) = match model.torus() {
            Some(t) => {
                let mean = t.phi0().mean();
                (Some(center(&t.phi0().shifted(-mean).dealiased())), mean)
            }
            None => (None, 0.0),
        };
        Self {
            frame,
            clock: 0.0,
            oscillation,
            mean,
            coefficients: model.exact_factors().iter().map(|f| f.2).collect(),
            exact_potential: 0.0,
            rates: None,
        }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Normalized time.
    pub fn t(&self) -> f64 {
        match self.frame {
            Frame::Normalized => self.clock,
            Frame::Unnormalized => self.clock.ln_1p(),
        }
    }

    /// Unnormalized time `s = e^t − 1`.
    pub fn s(&self) -> f64 {
        match self.frame {
            Frame::Normalized => self.clock.exp_m1(),
            Frame::Unnormalized => self.clock,
        }
    }

    /// Full torus potential.
    pub fn phi(&self) -> Option<ScalarField> {
        self.oscillation.as_ref().map(|f| f.shifted(self.mean))
    }

    /// Zero-mean part of the torus potential.
    pub fn oscillation(&self) -> Option<&ScalarField> {
        self.oscillation.as_ref()
    }

    /// Spatial mean of the torus potential.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn exact_potential(&self) -> f64 {
        self.exact_potential
    }

    /// Cached time derivative, present after [`FlowState::refresh`].
    pub fn rates(&self) -> Option<&Rates> {
        self.rates.as_ref()
    }

    /// Recomputes and caches the time derivative.
    pub fn refresh(&mut self, model: &ModelSpec) -> Result<&Rates> {
        let rates = flow_rhs(self, model)?;
        Ok(self.rates.insert(rates))
    }

    /// Evolving torus metric: `e^{-t}ω_0 + ∂∂̄φ` or `ω_0 + ∂∂̄φ̃`.
    pub fn torus_metric(&self, model: &ModelSpec) -> Result<Option<MetricField>> {
        match (model.torus(), &self.oscillation) {
            (Some(torus), Some(phi)) => Ok(Some(evolving_metric(torus.omega0(), self.frame, self.clock, phi)?)),
            _ => Ok(None),
        }
    }

    /// The evolving torus metric as `(reference, ∂∂̄φ)`, kept apart so the
    /// curvature can be evaluated without rounding the perturbation.
    pub fn torus_metric_parts(&self, model: &ModelSpec) -> Result<Option<(MetricField, MetricField)>> {
        match (model.torus(), &self.oscillation) {
            (Some(torus), Some(phi)) => {
                let base = match self.frame {
                    Frame::Normalized => torus.omega0().scaled((-self.clock).exp()),
                    Frame::Unnormalized => torus.omega0().clone(),
                };
                Ok(Some((base, complex_hessian(phi)?)))
            }
            _ => Ok(None),
        }
    }

    /// Smallest eigenvalue of `e^t g` over every factor; invariant under the
    /// frame change.
    pub fn scale_free_margin(&self, model: &ModelSpec) -> Result<f64> {
        let scale = match self.frame {
            Frame::Normalized => self.clock.exp(),
            Frame::Unnormalized => 1.0,
        };
        let mut margin = self.coefficients.iter().fold(f64::INFINITY, |m, a| m.min(a * scale));
        if let (Some(torus), Some(osc)) = (model.torus(), &self.oscillation) {
            let g = scale_free_metric(torus.omega0(), self.frame, self.clock, osc)?;
            margin = margin.min(crate::geometry::positivity_margin(&g));
        }
        Ok(margin)
    }
}

/// Removes the mean exactly enough that it no longer carries rounding.
pub(crate) fn center(f: &ScalarField) -> ScalarField {
    let m = f.mean();
    f.shifted(-m)
}

/// Reference form `ω_t = e^{-t}ω_0` of the torus factor (`χ = 0` there).
pub fn reference_metric(t: f64, model: &ModelSpec) -> Result<Option<MetricField>> {
    if !(t >= 0.0) {
        return Err(Error::Domain { value: t, domain: "t >= 0" });
    }
    Ok(model.torus().map(|torus| torus.omega0().scaled((-t).exp())))
}

pub(crate) fn evolving_metric(omega0: &MetricField, frame: Frame, clock: f64, phi: &ScalarField) -> Result<MetricField> {
    let base = match frame {
        Frame::Normalized => omega0.scaled((-clock).exp()),
        Frame::Unnormalized => omega0.clone(),
    };
    base.axpy(1.0, &complex_hessian(phi)?)
}

/// `e^t g`: the evolving metric in the scale of `ω_0` (equal to `g` on the
/// unnormalized clock).
pub(crate) fn scale_free_metric(omega0: &MetricField, frame: Frame, clock: f64, phi: &ScalarField) -> Result<MetricField> {
    let factor = match frame {
        Frame::Normalized => clock.exp(),
        Frame::Unnormalized => 1.0,
    };
    omega0.axpy(factor, &complex_hessian(phi)?)
}

/// `u_c`: the constant part of `log(ω^n/Ω)` rescaled to the frame.
pub(crate) fn exact_log_volume(kinds: &[(ExactKind, usize)], coefficients: &[f64], frame: Frame, clock: f64) -> f64 {
    kinds
        .iter()
        .zip(coefficients)
        .map(|(&(kind, d), &a)| {
            let d = d as f64;
            match (kind, frame) {
                (ExactKind::RicciFlat, Frame::Normalized) => d * (a.ln() + clock),
                _ => d * a.ln(),
            }
        })
        .sum()
}

pub(crate) fn exact_kinds(model: &ModelSpec) -> Vec<(ExactKind, usize)> {
    model.exact_factors().iter().map(|f| (f.0, f.1)).collect()
}

/// Torus component of the flow velocity as (oscillation, mean), given the
/// potential as (oscillation, mean).
pub(crate) fn torus_rhs(model: &ModelSpec, frame: Frame, clock: f64, osc: &ScalarField, mean: f64) -> Result<(ScalarField, f64)> {
    let torus = model.torus().ok_or_else(|| Error::InvalidModel("no torus factor".into()))?;
    // log det(e^{-t}ω_0 + φ_{jk̄}) + dt = log det(ω_0 + e^t φ_{jk̄}).
    let scale = match frame {
        Frame::Normalized => clock.exp(),
        Frame::Unnormalized => 1.0,
    };
    let omega0 = torus.omega0();
    let dev = log_det_deviation(omega0)?.axpy(1.0, &log_det_ratio(omega0, &complex_hessian(osc)?.scaled(scale))?)?;
    let shift = reduce::tree_mean(&omega0.determinant()).ln();
    let dev = dev.into_values();
    let offset = match frame {
        Frame::Normalized => shift - torus.c_omega().ln() - mean,
        Frame::Unnormalized => shift - torus.c_omega().ln(),
    };
    let values: Vec<f64> = match frame {
        Frame::Normalized => dev.iter().zip(osc.values()).map(|(l, p)| l - p).collect(),
        Frame::Unnormalized => dev,
    };
    let raw = ScalarField::new(*osc.grid(), values)?;
    let m = raw.mean();
    let out = center(&raw.shifted(-m).dealiased());
    out.check_finite("flow velocity")?;
    Ok((out, offset + m))
}

pub(crate) fn exact_rates(kinds: &[(ExactKind, usize)], frame: Frame, clock: f64, coefficients: &[f64], exact_potential: f64) -> (Vec<f64>, f64) {
    let coeff_rates = kinds
        .iter()
        .zip(coefficients)
        .map(|(&(kind, _), &a)| match (frame, kind) {
            (Frame::Normalized, ExactKind::NegativeKe) => 1.0 - a,
            (Frame::Normalized, ExactKind::RicciFlat) => -a,
            (Frame::Unnormalized, ExactKind::NegativeKe) => 1.0,
            (Frame::Unnormalized, ExactKind::RicciFlat) => 0.0,
        })
        .collect();
    let u = exact_log_volume(kinds, coefficients, frame, clock);
    let potential_rate = match frame {
        Frame::Normalized => u - exact_potential,
        Frame::Unnormalized => u,
    };
    (coeff_rates, potential_rate)
}

/// Velocity of the potential flow.
///
/// Normalized torus factor of dimension `d`:
/// `φ̇ = log(e^{dt} det(e^{-t}g_0 + φ_{jk̄}) / c_Ω) − φ`. Unnormalized:
/// `φ̃_s = log(det(g_0 + φ̃_{jk̄}) / c_Ω)`. Exact coefficients follow their
/// linear ODEs. The torus velocity is dealiased.
pub fn flow_rhs(state: &FlowState, model: &ModelSpec) -> Result<Rates> {
    let (field, field_mean) = match &state.oscillation {
        Some(osc) => {
            let (f, m) = torus_rhs(model, state.frame, state.clock, osc, state.mean)?;
            (Some(f), m)
        }
        None => (None, 0.0),
    };
    let kinds = exact_kinds(model);
    let (coefficients, exact_potential) =
        exact_rates(&kinds, state.frame, state.clock, &state.coefficients, state.exact_potential);
    Ok(Rates { field, field_mean, coefficients, exact_potential })
}

/// Field snapshot stored in a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub clock: f64,
    pub phi: Vec<f64>,
}
