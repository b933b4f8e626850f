use serde::{Deserialize, Serialize};

use super::model::{Frame, ModelSpec};
use crate::{Error, Result};

/// Time integrator selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Implicit for models with a torus factor, explicit otherwise.
    Auto,
    /// Classical explicit Runge-Kutta.
    Rk4,
    /// Three-stage L-stable singly diagonally implicit Runge-Kutta.
    Sdirk3,
}

impl Integrator {
    pub fn resolve(self, model: &ModelSpec) -> Self {
        match self {
            Self::Auto if model.torus().is_some() => Self::Sdirk3,
            Self::Auto => Self::Rk4,
            other => other,
        }
    }
}

/// Flow integration settings. Times are on the integration clock: `t` for the
/// normalized flow, `s` for the unnormalized one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub frame: Frame,
    pub t_end: f64,
    pub dt_init: f64,
    pub dt_max: f64,
    /// Step-doubling error tolerance.
    pub tolerance: f64,
    pub sample_interval: f64,
    /// Explicit sample clocks; replaces the uniform interval when present.
    pub sample_times: Option<Vec<f64>>,
    pub elliptic_comparison: bool,
    pub integrator: Integrator,
    /// Store the torus potential at every sample.
    pub snapshots: bool,
    /// Added to the automatic choice of `A`.
    pub a_offset: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            frame: Frame::Normalized,
            t_end: 1.0,
            dt_init: 1e-3,
            dt_max: 0.5,
            tolerance: 1e-8,
            sample_interval: 0.1,
            sample_times: None,
            elliptic_comparison: false,
            integrator: Integrator::Auto,
            snapshots: false,
            a_offset: 0.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-2) {
            return bad(format!("tolerance must lie in (0, 1e-2], got {}", self.tolerance));
        }
        if !(self.dt_init > 0.0 && self.dt_max >= self.dt_init && self.dt_max.is_finite()) {
            return bad("need 0 < dt_init <= dt_max".into());
        }
        if !(self.a_offset.is_finite() && self.a_offset >= 0.0) {
            return bad("a_offset must be a non-negative number".into());
        }
        match &self.sample_times {
            Some(times) => {
                if times.iter().any(|t| !(t.is_finite() && *t > 0.0 && *t <= self.t_end)) {
                    return bad("sample times must lie in (0, t_end]".into());
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sample times must be strictly increasing".into());
                }
            }
            None => {
                if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
                    return bad("sample_interval must be positive".into());
                }
            }
        }
        if self.elliptic_comparison && self.frame != Frame::Normalized {
            return bad("the elliptic comparison is defined on the normalized flow only".into());
        }
        Ok(())
    }

    /// Sample clocks after the initial one; the last equals `t_end`.
    pub fn sample_clocks(&self) -> Vec<f64> {
        if let Some(times) = &self.sample_times {
            return times.clone();
        }
        let mut out = Vec::new();
        let mut k = 1u64;
        loop {
            let t = k as f64 * self.sample_interval;
            if t >= self.t_end * (1.0 - 1e-12) {
                out.push(self.t_end);
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}
