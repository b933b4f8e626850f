use super::*;
use crate::geometry::{ma_density, MetricField, ScalarField, TorusGrid};
use crate::homothety::FactorSpec;

fn torus_model(n: usize, phi0: impl Fn(&[f64; 4]) -> f64 + Sync + Send, eta: impl Fn(&[f64; 4]) -> f64 + Sync + Send, c: f64) -> ModelSpec {
    let grid = TorusGrid::new(1, n).unwrap();
    let t = TorusFactor::new(ScalarField::from_fn(grid, eta), ScalarField::from_fn(grid, phi0), c).unwrap();
    ModelSpec::new(vec![FactorSpec::torus(t)]).unwrap()
}

fn flat(c: f64) -> ModelSpec {
    torus_model(16, |_| 0.0, |_| 0.0, c)
}

#[test]
fn reference_metric_examples() {
    let m = torus_model(16, |_| 0.0, |x| 0.1 * x[0].cos(), 1.0);
    let w0 = reference_metric(0.0, &m).unwrap().unwrap();
    assert_eq!(&w0, m.torus().unwrap().omega0());
    let half = reference_metric(2f64.ln(), &m).unwrap().unwrap();
    let expect = w0.scaled(0.5);
    assert!(half.entries().iter().zip(expect.entries()).all(|(a, b)| (a - b).norm() < 1e-15));
    let late = reference_metric(800.0, &m).unwrap().unwrap();
    assert!(late.entries().iter().all(|v| v.norm() == 0.0));
    assert!(reference_metric(-1.0, &m).is_err());
}

#[test]
fn flow_rhs_examples() {
    let state = FlowState::initial(&flat(1.0), Frame::Normalized);
    let r = flow_rhs(&state, &flat(1.0)).unwrap();
    assert!(r.torus_velocity().unwrap().sup_abs() == 0.0);

    let m = flat(std::f64::consts::E);
    let r = flow_rhs(&FlowState::initial(&m, Frame::Normalized), &m).unwrap();
    assert!(r.torus_velocity().unwrap().values().iter().all(|v| (v + 1.0).abs() < 1e-15));

    let m = torus_model(64, |x| 0.1 * x[0].cos(), |_| 0.0, 1.0);
    let r = flow_rhs(&FlowState::initial(&m, Frame::Normalized), &m).unwrap().torus_velocity().unwrap();
    let grid = *m.torus().unwrap().grid();
    let det = ma_density(&MetricField::identity(grid), m.torus().unwrap().phi0()).unwrap();
    for (i, v) in r.values().iter().enumerate() {
        let x = grid.coords(i)[0];
        let expect = (1.0 - 0.025 * x.cos()).ln() - 0.1 * x.cos();
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        assert!((det.values()[i] - (1.0 - 0.025 * x.cos())).abs() < 1e-14);
    }
}

#[test]
fn stationary_step_grows_to_cap() {
    let m = flat(1.0);
    let config = FlowConfig { dt_init: 0.01, dt_max: 0.3, ..FlowConfig::default() };
    let mut state = FlowState::initial(&m, Frame::Normalized);
    let mut stepper = Stepper::new(&m, &config, &state).unwrap();
    for _ in 0..8 {
        state = stepper.step(&state, f64::INFINITY).unwrap();
    }
    assert_eq!(stepper.dt(), 0.3);
    assert!(state.phi().unwrap().sup_abs() < 1e-15);
    let one = step(&FlowState::initial(&m, Frame::Normalized), &m, &config).unwrap();
    assert_eq!(one.clock(), 0.01);
}

#[test]
fn constant_volume_flow_matches_closed_form() {
    let m = flat(std::f64::consts::E);
    for integrator in [Integrator::Rk4, Integrator::Sdirk3] {
        let config = FlowConfig { t_end: 1.0, tolerance: 1e-9, integrator, ..FlowConfig::default() };
        let (state, _) = evolve(&m, &config, |_| Ok(())).unwrap();
        let phi = state.phi().unwrap();
        let expect = -(1.0 - (-1.0f64).exp());
        assert!(phi.values().iter().all(|v| (v - expect).abs() < 1e-8), "{integrator:?}: {}", phi.sup());
    }
    let config = FlowConfig { t_end: 1.0, sample_times: Some(vec![2f64.ln(), 1.0]), ..FlowConfig::default() };
    let traj = run(&m, &config).unwrap();
    let r = &traj.records[1];
    assert_eq!(r.t, 2f64.ln());
    assert!((r.phi_sup.unwrap() + 0.5).abs() < 1e-8 && (r.phi_inf.unwrap() + 0.5).abs() < 1e-8);
}

#[test]
fn error_estimates_audited_against_half_steps() {
    let m = torus_model(32, |x| 0.1 * x[0].cos(), |_| 0.0, 1.0);
    let tol = 1e-7;
    let config = FlowConfig { t_end: 0.5, tolerance: tol, integrator: Integrator::Rk4, dt_init: 1e-3, ..FlowConfig::default() };
    let mut state = FlowState::initial(&m, Frame::Normalized);
    let mut stepper = Stepper::new(&m, &config, &state).unwrap();
    for _ in 0..6 {
        let next = stepper.step(&state, f64::INFINITY).unwrap();
        let rec = *stepper.trail().iter().rev().find(|r| r.accepted).unwrap();
        assert!(rec.error_estimate <= tol);
        // Independent rerun with four quarter steps: the accepted two-half-step
        // result should lie within the estimated error of it (with margin).
        let quarter = FlowConfig { dt_init: rec.dt / 4.0, dt_max: rec.dt / 4.0, tolerance: 1e-2, ..config.clone() };
        let mut fine = state.clone();
        let mut fine_stepper = Stepper::new(&m, &quarter, &fine).unwrap();
        while fine.clock() < next.clock() {
            fine = fine_stepper.step(&fine, next.clock()).unwrap();
        }
        let diff = fine.phi().unwrap().max_abs_diff(&next.phi().unwrap()) * next.clock().exp();
        assert!(diff <= 15.0 * tol.max(rec.error_estimate), "diff {diff:.3e} est {:.3e}", rec.error_estimate);
        state = next;
    }
}

#[test]
fn stationary_run_is_flat_everywhere() {
    let m = flat(1.0);
    let config = FlowConfig { t_end: 10.0, sample_interval: 1.0, dt_max: 2.0, ..FlowConfig::default() };
    let traj = run(&m, &config).unwrap();
    assert_eq!(traj.records.len(), 11);
    for r in &traj.records {
        assert_eq!((r.r_sup, r.r_inf), (0.0, 0.0));
        assert_eq!((r.phidot_sup, r.phidot_inf), (Some(0.0), Some(0.0)));
    }
    assert!(traj.records.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn rescale_examples() {
    let m = ModelSpec::new(vec![FactorSpec::ricci_flat(1, 1.0), FactorSpec::negative_ke(1, 2.0)]).unwrap();
    let config = FlowConfig { t_end: 1.0, sample_times: Some(vec![2f64.ln(), 1.0]), tolerance: 1e-12, ..FlowConfig::default() };
    let traj = run(&m, &config).unwrap();
    assert!((traj.records[1].r_sup + 2.0 / 3.0).abs() < 1e-11);
    let r = rescale_to_unnormalized(traj).unwrap();
    assert_eq!(r.records[0].s, Some(0.0));
    assert_eq!(r.records[0].r_sup, -0.5);
    assert!((r.records[1].s.unwrap() - 1.0).abs() < 1e-15);
    assert!((r.records[1].r_sup + 1.0 / 3.0).abs() < 1e-11);
    assert!(r.records[1].phi_sup.is_none());
    assert!(matches!(rescale_to_unnormalized(r), Err(Error::RescaleOnUnnormalized)));
}

#[test]
fn rescaled_constant_volume_run_matches_direct_run() {
    let m = flat(std::f64::consts::E);
    let tol = 1e-9;
    let times: Vec<f64> = (1..=8).map(|k| 0.5 * k as f64).collect();
    let norm = FlowConfig { t_end: 4.0, sample_times: Some(times.clone()), tolerance: tol, ..FlowConfig::default() };
    let s_times: Vec<f64> = times.iter().map(|t| t.exp_m1()).collect();
    let un = FlowConfig {
        frame: Frame::Unnormalized,
        t_end: *s_times.last().unwrap(),
        sample_times: Some(s_times),
        tolerance: tol,
        dt_max: 100.0,
        ..FlowConfig::default()
    };
    let a = rescale_to_unnormalized(run(&m, &norm).unwrap()).unwrap();
    let b = run(&m, &un).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.s.unwrap() - y.s.unwrap()).abs() <= 1e-12 * y.s.unwrap().max(1.0));
        assert!((x.r_sup - y.r_sup).abs() <= 10.0 * tol);
        assert!((x.positivity_margin - y.positivity_margin).abs() <= 10.0 * tol);
    }
}

#[test]
fn sandwich_examples() {
    let times: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    let rep = volume_sandwich_check(&flat(1.0), &times).unwrap();
    assert_eq!(rep.c1, 1.0);
    assert!((rep.lower_constant - 1.0).abs() < 1e-12 && (rep.upper_constant - 1.0).abs() < 1e-12);

    let m = torus_model(64, |_| 0.0, |x| 0.1 * x[0].cos(), 1.0);
    let rep = volume_sandwich_check(&m, &times).unwrap();
    let expect = (1.0f64 / 0.975).max(1.025);
    assert!((rep.c1 - expect).abs() < 1e-12);
    let rep0 = volume_sandwich_check(&m, &[0.0]).unwrap();
    assert!((rep0.lower_constant.max(rep0.upper_constant) - rep0.c1).abs() < 1e-12);

    let mixed = ModelSpec::new(vec![
        FactorSpec::negative_ke(1, 0.5),
        FactorSpec::ricci_flat(2, 3.0),
        FactorSpec::torus(m.torus().unwrap().clone()),
    ])
    .unwrap();
    volume_sandwich_check(&mixed, &times).unwrap();
}

#[test]
fn kahler_class_volume_is_tracked() {
    // ∫ e^{φ̇+φ} Ω = e^{dt} ∫ ω_t^d = ∫ ω_0^d along the normalized flow.
    let m = torus_model(32, |x| 0.1 * x[0].cos() + 0.05 * (2.0 * x[1]).sin(), |x| 0.05 * x[1].cos(), 1.3);
    let config = FlowConfig { t_end: 2.0, sample_interval: 0.5, tolerance: 1e-9, ..FlowConfig::default() };
    let grid = *m.torus().unwrap().grid();
    let start = crate::geometry::integrate(&crate::geometry::Density::new(grid, m.torus().unwrap().omega0().determinant()).unwrap());
    evolve(&m, &config, |state| {
        let u = crate::estimates::u_field(state, &m)?;
        let weight = u.field.unwrap().map(|v| (v + u.constant).exp() * 1.3);
        let lhs = crate::geometry::integrate(&weight);
        let vol = crate::geometry::integrate(&crate::geometry::Density::new(grid, state.torus_metric(&m)?.unwrap().determinant())?);
        assert!((lhs - start).abs() < 1e-9 * start, "{lhs} vs {start}");
        assert!((vol * state.t().exp() - start).abs() < 1e-9 * start);
        Ok(())
    })
    .unwrap();
}

#[test]
fn runs_are_bitwise_deterministic() {
    let m = torus_model(32, |x| 0.1 * x[0].cos() + 0.03 * (x[0] - 2.0 * x[1]).sin(), |_| 0.0, 1.0);
    let config = FlowConfig { t_end: 1.0, sample_interval: 0.25, tolerance: 1e-8, snapshots: true, ..FlowConfig::default() };
    let a = run(&m, &config).unwrap();
    let b = run(&m, &config).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.snapshots.len(), b.snapshots.len());
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert!(x.phi.iter().zip(&y.phi).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let m = flat(1.0);
    for bad in [
        FlowConfig { t_end: 0.0, ..FlowConfig::default() },
        FlowConfig { tolerance: 0.1, ..FlowConfig::default() },
        FlowConfig { sample_times: Some(vec![0.5, 0.2]), ..FlowConfig::default() },
        FlowConfig { frame: Frame::Unnormalized, elliptic_comparison: true, ..FlowConfig::default() },
    ] {
        assert!(matches!(run(&m, &bad), Err(Error::InvalidConfig(_))));
    }
}

#[test]
fn single_mode_curvature_agrees_under_refinement() {
    let config = FlowConfig { t_end: 10.0, sample_interval: 0.5, tolerance: 1e-6, dt_max: 2.0, ..FlowConfig::default() };
    let sup = |n: usize| {
        let traj = run(&torus_model(n, |x| 0.1 * x[0].cos(), |_| 0.0, 1.0), &config).unwrap();
        traj.records.iter().map(|r| r.sup_abs_r()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (sup(128), sup(256));
    assert!(coarse.is_finite() && coarse > 0.0);
    assert!((coarse - fine).abs() < 1e-6, "{coarse} vs {fine}");
}
