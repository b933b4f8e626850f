use serde::{Deserialize, Serialize};

use super::config::{FlowConfig, Integrator};
use super::model::{Frame, ModelSpec};
use super::state::{center, scale_free_metric, exact_kinds, exact_log_volume, exact_rates, torus_rhs, FlowState};
use crate::elliptic::linear::Linearization;
use crate::geometry::{positivity_margin, ScalarField, TorusGrid};
use crate::homothety::ExactKind;
use crate::linsolve::KrylovOptions;
use crate::{reduce, Error, Result};

/// Alexander's three-stage, L-stable, stiffly accurate SDIRK of order 3.
const GAMMA: f64 = 0.435_866_521_508_459;

fn sdirk_tableau() -> ([f64; 3], [[f64; 3]; 3]) {
    let g = GAMMA;
    let c2 = 0.5 * (1.0 + g);
    let b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
    let b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
    ([g, c2, 1.0], [[g, 0.0, 0.0], [c2 - g, g, 0.0], [b1, b2, g]])
}

/// Flattened view of a state: torus oscillation, torus mean, exact
/// coefficients, exact potential.
struct System<'a> {
    model: &'a ModelSpec,
    frame: Frame,
    grid: Option<TorusGrid>,
    field_len: usize,
    kinds: Vec<(ExactKind, usize)>,
    tolerance: f64,
}

enum Attempt {
    Rejected(&'static str),
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::PositivityLost { .. } | Error::NonFinite { .. } | Error::NewtonDivergence { .. } | Error::KrylovStall { .. }
    )
}

impl<'a> System<'a> {
    fn new(model: &'a ModelSpec, frame: Frame, tolerance: f64) -> Self {
        let grid = model.torus().map(|t| *t.grid());
        Self { model, frame, grid, field_len: grid.map_or(0, |g| g.len()), kinds: exact_kinds(model), tolerance }
    }

    fn pack(&self, state: &FlowState) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.field_len + self.kinds.len() + 2);
        if let Some(osc) = &state.oscillation {
            y.extend_from_slice(osc.values());
        }
        y.push(state.mean);
        y.extend_from_slice(&state.coefficients);
        y.push(state.exact_potential);
        y
    }

    fn unpack(&self, clock: f64, y: Vec<f64>) -> Result<FlowState> {
        let n = self.field_len;
        let oscillation = match self.grid {
            // Accepted states are projected back onto the zero-mean band.
            Some(grid) => Some(center(&ScalarField::new(grid, y[..n].to_vec())?.dealiased())),
            None => None,
        };
        Ok(FlowState {
            frame: self.frame,
            clock,
            oscillation,
            mean: y[n],
            coefficients: y[n + 1..n + 1 + self.kinds.len()].to_vec(),
            exact_potential: y[y.len() - 1],
            rates: None,
        })
    }

    fn field(&self, y: &[f64]) -> Result<Option<ScalarField>> {
        match self.grid {
            Some(grid) => Ok(Some(ScalarField::new(grid, y[..self.field_len].to_vec())?)),
            None => Ok(None),
        }
    }

    fn rhs(&self, clock: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.field_len;
        let m = self.kinds.len();
        let mut out = Vec::with_capacity(y.len());
        match self.field(y)? {
            Some(osc) => {
                let (f, mean_rate) = torus_rhs(self.model, self.frame, clock, &osc, y[n])?;
                out.extend_from_slice(f.values());
                out.push(mean_rate);
            }
            None => out.push(0.0),
        }
        let (rates, potential) = exact_rates(&self.kinds, self.frame, clock, &y[n + 1..n + 1 + m], y[n + 1 + m]);
        out.extend(rates);
        out.push(potential);
        Ok(out)
    }

    fn field_weight(&self, clock: f64) -> f64 {
        match self.frame {
            Frame::Normalized => clock.exp(),
            Frame::Unnormalized => 1.0,
        }
    }

    /// Weighted max norm. Torus potentials are measured against the scale of
    /// the reference form, exact components relative to their size.
    fn error_norm(&self, clock: f64, err: &[f64], y: &[f64]) -> f64 {
        let n = self.field_len;
        let w = self.field_weight(clock);
        let mut e = reduce::sup_abs(&err[..n]) * w;
        for (d, v) in err[n..].iter().zip(&y[n..]) {
            e = e.max(d.abs() / v.abs().max(1.0));
        }
        e
    }

    fn margin(&self, clock: f64, y: &[f64]) -> Result<f64> {
        let scale = self.field_weight(clock);
        let n = self.field_len;
        let mut margin = y[n + 1..n + 1 + self.kinds.len()].iter().fold(f64::INFINITY, |m, a| m.min(a * scale));
        if let (Some(phi), Some(torus)) = (self.field(y)?, self.model.torus()) {
            let g = scale_free_metric(torus.omega0(), self.frame, clock, &phi)?;
            margin = margin.min(positivity_margin(&g));
        }
        Ok(margin)
    }

    /// Solves `Y − hγ f(clock, Y) = r` for one implicit stage.
    fn solve_stage(&self, clock: f64, hg: f64, r: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let n = self.field_len;
        let m = self.kinds.len();
        let mut y = vec![0.0; r.len()];
        // Exact components are linear in themselves and solved in closed form.
        for (i, &(kind, _)) in self.kinds.iter().enumerate() {
            let ri = r[n + 1 + i];
            y[n + 1 + i] = match (self.frame, kind) {
                (Frame::Normalized, ExactKind::NegativeKe) => (ri + hg) / (1.0 + hg),
                (Frame::Normalized, ExactKind::RicciFlat) => ri / (1.0 + hg),
                (Frame::Unnormalized, ExactKind::NegativeKe) => ri + hg,
                (Frame::Unnormalized, ExactKind::RicciFlat) => ri,
            };
        }
        let u = exact_log_volume(&self.kinds, &y[n + 1..n + 1 + m], self.frame, clock);
        let last = n + 1 + m;
        y[last] = match self.frame {
            Frame::Normalized => (r[last] + hg * u) / (1.0 + hg),
            Frame::Unnormalized => r[last] + hg * u,
        };
        let (Some(grid), Some(torus)) = (self.grid, self.model.torus()) else {
            y[n] = r[n];
            return Ok(y);
        };
        // The mean rate is `offset(osc) − mean` (normalized) or `offset(osc)`,
        // so the mean is eliminated in closed form for the current oscillation.
        let solve_mean = |offset: f64| match self.frame {
            Frame::Normalized => (r[n] + hg * offset) / (1.0 + hg),
            Frame::Unnormalized => r[n] + hg * offset,
        };
        let alpha = match self.frame {
            Frame::Normalized => 1.0 + hg,
            Frame::Unnormalized => 1.0,
        };
        let target = 1e-3 * self.tolerance / self.field_weight(clock);
        let krylov = KrylovOptions { relative_tolerance: 1e-6, max_iterations: 200, stall_threshold: 1e-3 };
        let mut osc = ScalarField::new(grid, guess[..n].to_vec())?;
        let mut mean = guess[n];
        let mut last_step = f64::INFINITY;
        for _ in 0..15 {
            let (f, mean_rate) = torus_rhs(self.model, self.frame, clock, &osc, mean)?;
            // `mean_rate` already contains `−mean` on the normalized clock.
            let offset = match self.frame {
                Frame::Normalized => mean_rate + mean,
                Frame::Unnormalized => mean_rate,
            };
            mean = solve_mean(offset);
            let g_res: Vec<f64> =
                osc.values().iter().zip(f.values()).zip(&r[..n]).map(|((p, fv), rv)| rv - (p - hg * fv)).collect();
            let res = reduce::sup_abs(&g_res);
            if res <= target || last_step <= 1e-14 * (1.0 + osc.sup_abs()) {
                y[..n].copy_from_slice(osc.values());
                y[n] = mean;
                return Ok(y);
            }
            // Δ_g = e^t Δ_{e^t g} on the normalized clock.
            let g = scale_free_metric(torus.omega0(), self.frame, clock, &osc)?;
            let lin = Linearization::new(&g, alpha, hg * self.field_weight(clock))?;
            let (delta, _) = lin.solve(&g_res, &krylov)?;
            let delta = center(&ScalarField::new(grid, delta)?.dealiased());
            last_step = delta.sup_abs();
            osc = osc.axpy(1.0, &delta)?;
        }
        Err(Error::NewtonDivergence { iterations: 15, residual: f64::NAN })
    }

    fn rk4(&self, clock: f64, h: f64, y: &[f64]) -> Result<Vec<f64>> {
        let add = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, v)| x + c * v).collect() };
        let k1 = self.rhs(clock, y)?;
        let k2 = self.rhs(clock + 0.5 * h, &add(y, &k1, 0.5 * h))?;
        let k3 = self.rhs(clock + 0.5 * h, &add(y, &k2, 0.5 * h))?;
        let k4 = self.rhs(clock + h, &add(y, &k3, h))?;
        Ok((0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
    }

    fn sdirk3(&self, clock: f64, h: f64, y: &[f64]) -> Result<Vec<f64>> {
        let (c, a) = sdirk_tableau();
        let hg = h * GAMMA;
        let mut ks: Vec<Vec<f64>> = Vec::with_capacity(3);
        let mut guess = y.to_vec();
        let mut last = y.to_vec();
        for i in 0..3 {
            let mut r = y.to_vec();
            for (j, k) in ks.iter().enumerate() {
                let w = h * a[i][j];
                r.iter_mut().zip(k).for_each(|(rv, kv)| *rv += w * kv);
            }
            let stage = self.solve_stage(clock + c[i] * h, hg, &r, &guess)?;
            ks.push(stage.iter().zip(&r).map(|(s, rv)| (s - rv) / hg).collect());
            guess = stage.clone();
            last = stage;
        }
        Ok(last)
    }

    fn advance(&self, method: Integrator, clock: f64, h: f64, y: &[f64]) -> Result<Vec<f64>> {
        match method {
            Integrator::Sdirk3 => self.sdirk3(clock, h, y),
            _ => self.rk4(clock, h, y),
        }
    }
}

/// One entry of the step-size controller's audit trail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub clock: f64,
    pub dt: f64,
    pub error_estimate: f64,
    pub accepted: bool,
}

/// Adaptive integrator with step-doubling error control.
pub struct Stepper<'a> {
    system: System<'a>,
    method: Integrator,
    dt: f64,
    dt_max: f64,
    tolerance: f64,
    margin_floor: f64,
    trail: Vec<StepRecord>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ModelSpec, config: &FlowConfig, start: &FlowState) -> Result<Self> {
        config.validate()?;
        let method = config.integrator.resolve(model);
        let system = System::new(model, start.frame, config.tolerance);
        let margin0 = start.scale_free_margin(model)?;
        Ok(Self {
            system,
            method,
            dt: config.dt_init,
            dt_max: config.dt_max,
            tolerance: config.tolerance,
            margin_floor: 0.1 * margin0,
            trail: Vec::new(),
        })
    }

    pub fn method(&self) -> Integrator {
        self.method
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn trail(&self) -> &[StepRecord] {
        &self.trail
    }

    fn order(&self) -> i32 {
        match self.method {
            Integrator::Sdirk3 => 3,
            _ => 4,
        }
    }

    fn attempt(&self, clock: f64, h: f64, y: &[f64]) -> Result<std::result::Result<(Vec<f64>, f64), Attempt>> {
        let run = || -> Result<(Vec<f64>, f64)> {
            let full = self.system.advance(self.method, clock, h, y)?;
            let mid = self.system.advance(self.method, clock, 0.5 * h, y)?;
            let half = self.system.advance(self.method, clock + 0.5 * h, 0.5 * h, &mid)?;
            let diff: Vec<f64> = half.iter().zip(&full).map(|(a, b)| a - b).collect();
            let scale = f64::from(2_i32.pow(self.order() as u32) - 1);
            let err = self.system.error_norm(clock + h, &diff, &half) / scale;
            Ok((half, err))
        };
        match run() {
            Ok(v) => Ok(Ok(v)),
            Err(e) if recoverable(&e) => Ok(Err(Attempt::Rejected("stage failure"))),
            Err(e) => Err(e),
        }
    }

    /// Takes one accepted step, never passing `limit`.
    pub fn step(&mut self, state: &FlowState, limit: f64) -> Result<FlowState> {
        let y = self.system.pack(state);
        let clock = state.clock;
        let p = f64::from(self.order());
        loop {
            let remaining = limit - clock;
            let clipped = self.dt >= remaining * (1.0 - 1e-12);
            let h = if clipped { remaining } else { self.dt };
            if !(h >= 1e-12) {
                return Err(Error::StepFailure {
                    t: clock,
                    dt: h,
                    reason: "step size underflow".into(),
                    partial: None,
                });
            }
            let outcome = self.attempt(clock, h, &y)?;
            // Error per unit step: the local budget shrinks with h, so the
            // global error stays near the tolerance over unit-length runs.
            let budget = self.tolerance * h.min(1.0);
            let (reason, err) = match outcome {
                Ok((y_new, err)) if err <= budget => {
                    let next_clock = if clipped { limit } else { clock + h };
                    let margin = self.system.margin(next_clock, &y_new);
                    match margin {
                        Ok(m) if m >= self.margin_floor => {
                            let grow = if err == 0.0 { 4.0 } else { (0.9 * (budget / err).powf(1.0 / p)).min(4.0) };
                            let proposal = (h * grow).min(self.dt_max);
                            self.dt = if clipped { self.dt.max(proposal).min(self.dt_max) } else { proposal };
                            self.trail.push(StepRecord { clock, dt: h, error_estimate: err, accepted: true });
                            return self.system.unpack(next_clock, y_new);
                        }
                        Ok(_) => ("positivity margin below a tenth of its initial value", err),
                        Err(e) if recoverable(&e) => ("positivity lost", err),
                        Err(e) => return Err(e),
                    }
                }
                Ok((_, err)) => ("error estimate above tolerance", err),
                Err(Attempt::Rejected(r)) => (r, f64::NAN),
            };
            self.trail.push(StepRecord { clock, dt: h, error_estimate: err, accepted: false });
            let shrink = if err.is_finite() && reason.starts_with("error") {
                (0.9 * (budget / err).powf(1.0 / p)).clamp(0.2, 0.5)
            } else {
                0.5
            };
            self.dt = h * shrink;
            if self.dt < 1e-12 {
                return Err(Error::StepFailure { t: clock, dt: self.dt, reason: reason.into(), partial: None });
            }
        }
    }
}

/// Single adaptive step from `state` with a fresh controller.
pub fn step(state: &FlowState, model: &ModelSpec, config: &FlowConfig) -> Result<FlowState> {
    let mut stepper = Stepper::new(model, config, state)?;
    stepper.step(state, f64::INFINITY)
}

/// Integrates from the initial state and calls `on_sample` at every sample
/// clock, starting with the initial state. States handed to the callback
/// carry their cached velocity.
pub fn evolve(
    model: &ModelSpec,
    config: &FlowConfig,
    mut on_sample: impl FnMut(&FlowState) -> Result<()>,
) -> Result<(FlowState, Vec<StepRecord>)> {
    config.validate()?;
    let mut state = FlowState::initial(model, config.frame);
    state.refresh(model)?;
    on_sample(&state)?;
    let mut stepper = Stepper::new(model, config, &state)?;
    for target in config.sample_clocks() {
        while state.clock < target {
            state = stepper.step(&state, target)?;
        }
        state.refresh(model)?;
        on_sample(&state)?;
    }
    Ok((state, stepper.trail))
}
