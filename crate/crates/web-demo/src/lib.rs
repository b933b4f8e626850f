//! Browser bindings: each export runs a small computation and returns JSON
//! for the page to draw.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use krflow_core::elliptic::{apriori_bound_check, solve_psi};
use krflow_core::harness::random_torus_scenario;
use krflow_core::homothety::{scalar_total, FactorSpec};
use krflow_core::maflow::{run, FlowConfig, Frame, ModelSpec};

fn to_js<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

fn err(e: krflow_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct ProductCurve {
    clock: Vec<f64>,
    r: Vec<f64>,
    closed_form: Vec<f64>,
    /// `(1+s)|R|`, only in the unnormalized frame.
    scaled: Option<Vec<f64>>,
    max_error: f64,
}

/// Flat × KE product with KE coefficient `a0`, integrated to `t_end`.
#[wasm_bindgen]
pub fn product_curvature(a0: f64, t_end: f64, unnormalized: bool) -> Result<String, JsError> {
    let factors = vec![FactorSpec::ricci_flat(1, 1.0), FactorSpec::negative_ke(1, a0)];
    let model = ModelSpec::new(factors.clone()).map_err(err)?;
    let frame = if unnormalized { Frame::Unnormalized } else { Frame::Normalized };
    let flow = FlowConfig { frame, t_end, sample_interval: t_end / 200.0, dt_max: t_end / 50.0, tolerance: 1e-10, ..FlowConfig::default() };
    let traj = run(&model, &flow).map_err(err)?;
    let clock: Vec<f64> = traj.records.iter().map(|r| r.clock()).collect();
    let r: Vec<f64> = traj.records.iter().map(|r| r.r_sup).collect();
    let closed_form: Vec<f64> = clock.iter().map(|&c| scalar_total(c, &factors, frame, None).sup()).collect();
    let max_error = r.iter().zip(&closed_form).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scaled = unnormalized.then(|| clock.iter().zip(&r).map(|(s, r)| (1.0 + s) * r.abs()).collect());
    to_js(&ProductCurve { clock, r, closed_form, scaled, max_error })
}

#[derive(Serialize)]
struct TorusRun {
    t: Vec<f64>,
    r_sup: Vec<f64>,
    r_inf: Vec<f64>,
    phidot_sup: Vec<f64>,
    phidot_inf: Vec<f64>,
    h_grad: Vec<f64>,
    r_gap: f64,
    steps: usize,
}

/// Seeded random potential on a `n × n` torus with modes up to `kmax`.
#[wasm_bindgen]
pub fn torus_flow(n: usize, kmax: u32, seed: u32, t_end: f64) -> Result<String, JsError> {
    let flow = FlowConfig { t_end, sample_interval: t_end / 40.0, tolerance: 1e-6, dt_max: 1.0, ..FlowConfig::default() };
    let cfg = random_torus_scenario("demo", n, i64::from(kmax), u64::from(seed), flow);
    let model = cfg.build_model().map_err(err)?;
    let traj = run(&model, &cfg.flow).map_err(err)?;
    let rec = &traj.records;
    let col = |f: &dyn Fn(&krflow_core::estimates::MonitorRecord) -> Option<f64>| -> Vec<f64> {
        rec.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect()
    };
    to_js(&TorusRun {
        t: col(&|r| Some(r.t)),
        r_sup: col(&|r| Some(r.r_sup)),
        r_inf: col(&|r| Some(r.r_inf)),
        phidot_sup: col(&|r| r.phidot_sup),
        phidot_inf: col(&|r| r.phidot_inf),
        h_grad: col(&|r| r.h_grad_sup),
        r_gap: rec.iter().map(|r| r.r_gap).fold(0.0, f64::max),
        steps: traj.stats.accepted_steps,
    })
}

#[derive(Serialize)]
struct EllipticRun {
    residuals: Vec<f64>,
    /// `ψ` along the first real axis.
    x: Vec<f64>,
    psi: Vec<f64>,
    sup_psi: f64,
    upper_bound: f64,
    relative_defect: f64,
}

/// Comparison equation at `s` on a `n × n` torus whose background potential
/// is `amplitude · cos x`.
#[wasm_bindgen]
pub fn elliptic_solve(s: f64, n: usize, amplitude: f64) -> Result<String, JsError> {
    use krflow_core::geometry::{ScalarField, TorusGrid};
    use krflow_core::maflow::TorusFactor;
    let grid = TorusGrid::new(1, n).map_err(err)?;
    let eta = ScalarField::from_fn(grid, |x| amplitude * x[0].cos());
    let torus = TorusFactor::new(eta, ScalarField::zeros(grid), 1.0).map_err(err)?;
    let model = ModelSpec::new(vec![FactorSpec::torus(torus)]).map_err(err)?;
    let sol = solve_psi(s, &model).map_err(err)?;
    let bound = apriori_bound_check(&sol, &model).map_err(err)?;
    // The first axis varies fastest, so the first `n` points are the slice.
    let x: Vec<f64> = (0..n).map(|i| grid.coords(i)[0]).collect();
    let psi: Vec<f64> = (0..n).map(|i| sol.psi.values()[i] + sol.offset).collect();
    to_js(&EllipticRun {
        residuals: sol.residual_trace.clone(),
        x,
        psi,
        sup_psi: bound.sup_psi,
        upper_bound: bound.upper_bound,
        relative_defect: bound.relative_defect,
    })
}
