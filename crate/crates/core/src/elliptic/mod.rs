//! Comparison family `(ω_s + i∂∂̄ψ)^n = e^ψ e^{−(n−κ)s} Ω`, the bump `ρ`
//! and the time interpolant `Φ` built from consecutive members.

pub(crate) mod linear;

use serde::Serialize;

use crate::geometry::{complex_hessian, integrate, log_det_ratio, Density, MetricField, ScalarField};
use crate::homothety::{coefficient, ExactKind};
use crate::linsolve::KrylovOptions;
use crate::maflow::{Frame, ModelSpec};
use crate::{reduce, Error, Result};
use linear::Linearization;

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Convergence threshold on `sup|F|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub krylov: KrylovOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 50, krylov: KrylovOptions::default() }
    }
}

/// Converged Newton iterate for one `s`.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticSolution {
    pub s: f64,
    /// Torus part of `ψ_s`.
    #[serde(skip)]
    pub psi: ScalarField,
    /// Spatially constant part carried by the exact factors.
    pub offset: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `sup|F|` before the first step and after each accepted step.
    pub residual_trace: Vec<f64>,
    pub krylov_iterations: Vec<usize>,
}

impl EllipticSolution {
    /// `e_{k+1}/e_k²` over the last three steps of the residual trace.
    pub fn quadratic_ratios(&self) -> Vec<f64> {
        let tr = &self.residual_trace;
        let start = tr.len().saturating_sub(4);
        tr[start..].windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / (w[0] * w[0])).collect()
    }

    /// `sup ψ − inf ψ`; the constant parts cancel.
    pub fn oscillation(&self) -> f64 {
        self.psi.sup() - self.psi.inf()
    }

    pub fn sup_abs(&self) -> f64 {
        (self.psi.sup() + self.offset).abs().max((self.psi.inf() + self.offset).abs())
    }
}

/// Residual `log det(g + ∂∂̄ψ) − ψ − rhs` for `ψ = osc + mean`.
///
/// The oscillation is kept apart from the mean and the determinant is
/// expanded around the background, so a small oscillation on a shrinking
/// background keeps its relative precision.
fn residual(background: &MetricField, log_det_bg: &[f64], log_rhs: &ScalarField, osc: &ScalarField, mean: f64) -> Result<Vec<f64>> {
    let ratio = log_det_ratio(background, &complex_hessian(osc)?)?;
    let out: Vec<f64> = ratio
        .values()
        .iter()
        .zip(log_det_bg)
        .zip(osc.values().iter().zip(log_rhs.values()))
        .map(|((l, b), (p, r))| (b - r - mean) + l - p)
        .collect();
    Ok(out)
}

fn split(f: &ScalarField) -> (ScalarField, f64) {
    let m = f.mean();
    (f.shifted(-m), m)
}

/// Raw Newton record shared by the family solver and manufactured tests.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub psi: ScalarField,
    pub residual: f64,
    pub residual_trace: Vec<f64>,
    pub krylov_iterations: Vec<usize>,
}

/// Solves `log det(background + ∂∂̄ψ) = ψ + log_rhs` by damped Newton
/// iteration.
///
/// Every step solves `(1 − Δ_{g_ψ})δ = F` with BiCGSTAB; a trial step that
/// loses positivity or fails to lower `sup|F|` is halved.
pub fn solve_monge_ampere(
    background: &MetricField,
    log_rhs: &ScalarField,
    guess: ScalarField,
    options: &NewtonOptions,
) -> Result<NewtonOutcome> {
    if background.grid() != log_rhs.grid() || log_rhs.grid() != guess.grid() {
        return Err(Error::GridMismatch);
    }
    log_rhs.check_finite("right-hand side")?;
    let log_det_bg: Vec<f64> = background.determinant().iter().map(|v| v.ln()).collect();
    let (mut osc, mut mean) = split(&guess);
    let mut f = residual(background, &log_det_bg, log_rhs, &osc, mean)?;
    let mut r = reduce::sup_abs(&f);
    let mut trace = vec![r];
    let mut krylov_iterations = Vec::new();
    let mut iterations = 0;
    while r > options.tolerance {
        if iterations == options.max_iterations {
            return Err(Error::NewtonDivergence { iterations, residual: r });
        }
        iterations += 1;
        let g = background.axpy(1.0, &complex_hessian(&osc)?)?;
        let (delta, report) = Linearization::new(&g, 1.0, 1.0)?.solve(&f, &options.krylov)?;
        krylov_iterations.push(report.iterations);
        let (d_osc, d_mean) = split(&ScalarField::new(*osc.grid(), delta)?);
        let mut lambda = 1.0;
        loop {
            let trial = osc.axpy(lambda, &d_osc)?;
            let trial_mean = mean + lambda * d_mean;
            match residual(background, &log_det_bg, log_rhs, &trial, trial_mean) {
                Ok(ft) => {
                    let rt = reduce::sup_abs(&ft);
                    if rt < r {
                        osc = trial;
                        mean = trial_mean;
                        f = ft;
                        r = rt;
                        break;
                    }
                }
                Err(Error::PositivityLost { .. }) | Err(Error::NonFinite { .. }) => {}
                Err(e) => return Err(e),
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::NewtonDivergence { iterations, residual: r });
            }
        }
        trace.push(r);
    }
    let psi = osc.shifted(mean);
    Ok(NewtonOutcome { psi, residual: r, residual_trace: trace, krylov_iterations })
}

/// Background `ω_s = e^{-s} ω_0` of the torus factor.
pub fn comparison_background(s: f64, model: &ModelSpec) -> Result<MetricField> {
    let torus = model.torus().ok_or_else(|| Error::InvalidModel("comparison family needs a torus factor".into()))?;
    Ok(torus.omega0().scaled((-s).exp()))
}

/// Constant part of `ψ_s` on the exact factors: `Σ_KE d log a(s) + Σ_flat d log b_0`.
pub fn exact_offset(s: f64, model: &ModelSpec) -> f64 {
    model
        .exact_factors()
        .iter()
        .map(|&(kind, d, a0)| match kind {
            ExactKind::NegativeKe => d as f64 * coefficient(kind, a0, s, Frame::Normalized).ln(),
            ExactKind::RicciFlat => d as f64 * a0.ln(),
        })
        .sum()
}

/// Solves the comparison equation at parameter `s`, starting from `guess`
/// (zero when absent).
pub fn solve_psi_from(
    s: f64,
    model: &ModelSpec,
    guess: Option<&ScalarField>,
    options: &NewtonOptions,
) -> Result<EllipticSolution> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Domain { value: s, domain: "s >= 0" });
    }
    let torus = model.torus().ok_or_else(|| Error::InvalidModel("comparison family needs a torus factor".into()))?;
    let grid = *torus.grid();
    let background = comparison_background(s, model)?;
    let d = torus.dim() as f64;
    let rhs = ScalarField::constant(grid, -d * s + torus.c_omega().ln());
    let start = guess.cloned().unwrap_or_else(|| ScalarField::zeros(grid));
    let out = solve_monge_ampere(&background, &rhs, start, options)?;
    Ok(EllipticSolution {
        s,
        psi: out.psi,
        offset: exact_offset(s, model),
        residual: out.residual,
        iterations: out.residual_trace.len() - 1,
        residual_trace: out.residual_trace,
        krylov_iterations: out.krylov_iterations,
    })
}

pub fn solve_psi(s: f64, model: &ModelSpec) -> Result<EllipticSolution> {
    solve_psi_from(s, model, None, &NewtonOptions::default())
}

/// Solutions at several parameters, each warm-started from the previous one.
#[derive(Clone, Debug, Default)]
pub struct ComparisonFamily {
    solutions: Vec<EllipticSolution>,
}

impl ComparisonFamily {
    pub fn sweep(model: &ModelSpec, s_values: &[f64], options: &NewtonOptions) -> Result<Self> {
        let mut solutions: Vec<EllipticSolution> = Vec::with_capacity(s_values.len());
        for &s in s_values {
            let guess = solutions.last().map(|p| p.psi.clone());
            solutions.push(solve_psi_from(s, model, guess.as_ref(), options)?);
        }
        Ok(Self { solutions })
    }

    /// Integer members `s = 1, …, m_max + 2` needed to interpolate up to `t_end`.
    pub fn for_horizon(model: &ModelSpec, t_end: f64, options: &NewtonOptions) -> Result<Self> {
        let top = t_end.floor() as usize + 2;
        let s: Vec<f64> = (1..=top).map(|k| k as f64).collect();
        Self::sweep(model, &s, options)
    }

    pub fn get(&self, s: f64) -> Option<&EllipticSolution> {
        self.solutions.iter().find(|p| p.s == s)
    }

    pub fn solutions(&self) -> &[EllipticSolution] {
        &self.solutions
    }

    /// `max_s sup|ψ_s|` over the members.
    pub fn bound(&self) -> f64 {
        self.solutions.iter().map(EllipticSolution::sup_abs).fold(0.0, f64::max)
    }
}

/// Result of the a priori checks on one solution.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub s: f64,
    pub sup_psi: f64,
    /// `sup_X log(ω_s^n e^{(n−κ)s} / Ω)` on the torus factor.
    pub upper_bound: f64,
    /// `∫ e^ψ Ω`.
    pub integral: f64,
    /// `e^{(n−κ)s} [ω_s]^n`.
    pub volume: f64,
    pub relative_defect: f64,
}

/// Checks the maximum-principle bound and the integrated equation.
pub fn apriori_bound_check(sol: &EllipticSolution, model: &ModelSpec) -> Result<BoundReport> {
    let torus = model.torus().ok_or_else(|| Error::InvalidModel("comparison family needs a torus factor".into()))?;
    let grid = *torus.grid();
    let d = torus.dim() as f64;
    let c = torus.c_omega();
    let s = sol.s;
    let bg = comparison_background(s, model)?;
    let log_ratio: Vec<f64> = bg.determinant().iter().map(|v| (v * (d * s).exp() / c).ln()).collect();
    let upper_bound = reduce::sup(&log_ratio);
    let sup_psi = sol.psi.sup();
    let margin = upper_bound + 1e-8 - sup_psi;
    if margin < 0.0 {
        return Err(Error::BoundViolation { what: format!("sup ψ_{s} above the maximum-principle bound"), margin });
    }
    let weight = sol.psi.map(|p| p.exp() * c);
    let integral = integrate(&weight);
    let volume = (d * s).exp() * integrate(&Density::new(grid, bg.determinant())?);
    let relative_defect = (integral - volume).abs() / volume;
    if relative_defect > 1e-8 {
        return Err(Error::BoundViolation { what: format!("integrated equation at s = {s}"), margin: -relative_defect });
    }
    Ok(BoundReport { s, sup_psi, upper_bound, integral, volume, relative_defect })
}

fn sigma(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth non-increasing bump: `1` on `[0, ⅓]`, `0` on `[⅔, 1]`.
pub fn bump_rho(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain { value: t, domain: "[0, 1]" });
    }
    let x = ((2.0 / 3.0 - t) * 3.0).clamp(0.0, 1.0);
    let (a, b) = (sigma(x), sigma(1.0 - x));
    Ok(a / (a + b))
}

/// `Φ(·, t) = ρ(t−m) ψ_{m+1} + (1 − ρ(t−m)) ψ_{m+2}` split into its torus field
/// and its constant exact part.
#[derive(Clone, Debug)]
pub struct Interpolant {
    pub field: ScalarField,
    pub constant: f64,
}

pub fn build_interpolant(t: f64, family: &ComparisonFamily) -> Result<Interpolant> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain { value: t, domain: "t >= 0" });
    }
    let m = t.floor();
    let lo = family.get(m + 1.0).ok_or(Error::MissingSolution(m + 1.0))?;
    let hi = family.get(m + 2.0).ok_or(Error::MissingSolution(m + 2.0))?;
    let rho = bump_rho((t - m).min(1.0))?;
    let field = if rho == 1.0 {
        lo.psi.clone()
    } else if rho == 0.0 {
        hi.psi.clone()
    } else {
        lo.psi.zip_map(&hi.psi, |a, b| rho * a + (1.0 - rho) * b)?
    };
    Ok(Interpolant { field, constant: rho * lo.offset + (1.0 - rho) * hi.offset })
}

#[cfg(test)]
mod tests;
