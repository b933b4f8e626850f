use super::*;
use crate::elliptic::{ComparisonFamily, NewtonOptions};
use crate::geometry::TorusGrid;
use crate::homothety::FactorSpec;
use crate::maflow::{evolve, run, FlowConfig, Integrator, TorusFactor};
use std::f64::consts::E;

fn torus(n: usize, phi0: impl Fn(&[f64; 4]) -> f64 + Sync + Send, c: f64) -> ModelSpec {
    let grid = TorusGrid::new(1, n).unwrap();
    let t = TorusFactor::new(ScalarField::zeros(grid), ScalarField::from_fn(grid, phi0), c).unwrap();
    ModelSpec::new(vec![FactorSpec::torus(t)]).unwrap()
}

fn exc(a0: f64) -> ModelSpec {
    ModelSpec::new(vec![FactorSpec::ricci_flat(1, 1.0), FactorSpec::negative_ke(1, a0)]).unwrap()
}

fn states(model: &ModelSpec, config: &FlowConfig) -> Vec<FlowState> {
    let mut out = Vec::new();
    evolve(model, config, |s| {
        out.push(s.clone());
        Ok(())
    })
    .unwrap();
    out
}

#[test]
fn u_examples() {
    let cfg = FlowConfig { t_end: 2.0, sample_interval: 0.5, tolerance: 1e-10, ..FlowConfig::default() };
    for s in states(&torus(16, |_| 0.0, 1.0), &cfg) {
        let u = u_field(&s, &torus(16, |_| 0.0, 1.0)).unwrap();
        assert_eq!((u.sup(), u.inf()), (0.0, 0.0));
    }
    let m = torus(16, |_| 0.0, E);
    for s in states(&m, &cfg) {
        let u = u_field(&s, &m).unwrap();
        assert!((u.sup() + 1.0).abs() < 1e-9 && (u.inf() + 1.0).abs() < 1e-9);
    }
}

#[test]
fn choose_a_examples() {
    assert_eq!(choose_a_from_sup(3.2), 5.0);
    assert_eq!(choose_a_from_sup(-1.0), 1.0);
    assert_eq!(choose_a_from_sup(0.0), 2.0);
    let u = SplitField { field: None, constant: 3.2 };
    assert!(choose_a(&u) - u.sup() >= 1.8 - 1e-12);
}

#[test]
fn trace_examples() {
    let m = torus(16, |_| 0.0, 1.0);
    assert_eq!(trace_chi(&FlowState::initial(&m, Frame::Normalized), &m).constant, 0.0);
    let m = ModelSpec::new(vec![FactorSpec::negative_ke(1, 2.0), FactorSpec::negative_ke(2, 4.0)]).unwrap();
    assert_eq!(trace_chi(&FlowState::initial(&m, Frame::Normalized), &m).constant, 1.0);
    let cfg = FlowConfig { t_end: 40.0, sample_interval: 40.0, dt_max: 5.0, tolerance: 1e-12, ..FlowConfig::default() };
    let last = states(&exc(2.0), &cfg).pop().unwrap();
    assert!((trace_chi(&last, &exc(2.0)).constant - 1.0).abs() < 1e-12);
}

#[test]
fn scalar_examples() {
    let m = torus(16, |_| 0.0, 1.0);
    let r = scalar_from_u(&FlowState::initial(&m, Frame::Normalized), &m).unwrap();
    assert_eq!((r.sup(), r.inf()), (0.0, 0.0));
    let m = exc(2.0);
    let r = scalar_from_u(&FlowState::initial(&m, Frame::Normalized), &m).unwrap();
    assert_eq!(r.sup(), -0.5);
}

#[test]
fn scalar_identity_matches_direct_curvature_at_128() {
    let m = torus(128, |x| 0.2 * x[0].cos() + 0.1 * (x[0] - 2.0 * x[1]).sin(), 1.0);
    let cfg = FlowConfig { t_end: 0.5, sample_interval: 0.25, tolerance: 1e-8, ..FlowConfig::default() };
    let traj = run(&m, &cfg).unwrap();
    for r in &traj.records {
        assert!(r.r_gap <= 1e-6, "gap {:.3e}", r.r_gap);
        assert!(r.r_inf < 0.0 && r.r_sup > 0.0);
    }
}

#[test]
fn functional_examples() {
    // Stationary flat run with Φ = ψ ≡ 0.
    let m = torus(16, |_| 0.0, 1.0);
    let cfg = FlowConfig { t_end: 3.0, sample_interval: 1.0, elliptic_comparison: true, ..FlowConfig::default() };
    for r in run(&m, &cfg).unwrap().records {
        assert_eq!(r.m_vol_inf, Some(0.0));
        assert_eq!((r.h_grad_sup, r.k_sup), (Some(0.0), Some(0.0)));
        assert!(r.h_schwarz_sup.is_none());
    }
    // Constant volume model: closed forms φ = −(1 − e^{-t}), ψ ≡ −1.
    let m = torus(16, |_| 0.0, E);
    let cfg = FlowConfig { tolerance: 1e-12, t_end: 3.0, sample_interval: 0.25, elliptic_comparison: true, integrator: Integrator::Rk4, ..FlowConfig::default() };
    for r in run(&m, &cfg).unwrap().records {
        assert_eq!((r.h_grad_sup, r.k_sup), (Some(0.0), Some(0.0)));
        let m_vol = r.m_vol_inf.unwrap();
        assert!((m_vol - ((-r.t).exp() - 1.0)).abs() < 1e-10 && m_vol >= -1.0);
    }
    // Exact product: H = tr_ω χ = 1/a(t).
    let cfg = FlowConfig { t_end: 5.0, sample_interval: 0.5, tolerance: 1e-12, ..FlowConfig::default() };
    for r in run(&exc(2.0), &cfg).unwrap().records {
        let h = r.h_grad_sup.unwrap();
        assert!((h - r.trace_chi_sup).abs() < 1e-15 && h <= 1.0);
        assert!((h - 1.0 / (1.0 + (-r.t).exp())).abs() < 1e-11);
        assert!(r.r_gap <= 1e-12);
        assert!(r.h_schwarz_sup.is_some());
    }
}

#[test]
fn barrier_uses_the_interpolant_constant() {
    let m = torus(16, |x| 0.05 * x[0].cos(), 1.0);
    let fam = ComparisonFamily::for_horizon(&m, 1.0, &NewtonOptions::default()).unwrap();
    let state = FlowState::initial(&m, Frame::Normalized);
    let phi_cmp = crate::elliptic::build_interpolant(0.0, &fam).unwrap();
    let rec = functional_suite(&state, &m, 2.0, Some(&phi_cmp)).unwrap();
    let v = crate::maflow::flow_rhs(&state, &m).unwrap().torus_velocity().unwrap();
    let phi = state.phi().unwrap();
    let expect = (0..v.values().len())
        .map(|i| v.values()[i] + 2.0 * phi.values()[i] - phi_cmp.field.values()[i])
        .fold(f64::INFINITY, f64::min);
    assert!((rec.m_vol_inf.unwrap() - expect).abs() < 1e-14);
}

#[test]
fn schwarz_examples() {
    let cfg = FlowConfig { t_end: 10.0, sample_interval: 0.5, tolerance: 1e-12, ..FlowConfig::default() };
    let traj = run(&exc(2.0), &cfg).unwrap();
    let rep = schwarz_inequality_check(&traj, &exc(2.0)).unwrap();
    assert!((traj.records[0].trace_chi_sup - 0.5).abs() < 1e-15);
    assert!(rep.min_slack > 0.0 && rep.min_slack <= 0.25 + 1e-12);

    let traj = run(&exc(1.0), &cfg).unwrap();
    let rep = schwarz_inequality_check(&traj, &exc(1.0)).unwrap();
    assert!((rep.min_slack - 1.0).abs() < 1e-12);

    let m = ModelSpec::new(vec![FactorSpec::negative_ke(1, 2.0), FactorSpec::negative_ke(2, 4.0)]).unwrap();
    let rep = schwarz_inequality_check(&run(&m, &cfg).unwrap(), &m).unwrap();
    assert!(rep.min_slack >= 0.2);

    let un = FlowConfig { frame: Frame::Unnormalized, t_end: 100.0, sample_interval: 10.0, dt_max: 50.0, tolerance: 1e-12, ..FlowConfig::default() };
    schwarz_inequality_check(&run(&exc(2.0), &un).unwrap(), &exc(2.0)).unwrap();
}

#[test]
fn flipped_trace_is_detected() {
    let m = exc(2.0).with_fault(Fault::FlipChiTrace);
    let cfg = FlowConfig { t_end: 2.0, sample_interval: 0.5, tolerance: 1e-12, ..FlowConfig::default() };
    let traj = run(&m, &cfg).unwrap();
    assert!(traj.records.iter().all(|r| r.r_gap > 0.5));
    assert!(matches!(schwarz_inequality_check(&traj, &m), Err(crate::Error::InequalityViolation { .. })));
}

#[test]
fn stabilization_helpers() {
    let flat: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, 1.0)).collect();
    assert!((no_late_growth(&flat) - SLACK).abs() < 1e-15);
    let growing: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, i as f64)).collect();
    assert!(no_late_growth(&growing) < 0.0);
    assert!(stays_below_early_max(&growing, 2.0) < 0.0);
    let decaying: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, (-(i as f64)).exp())).collect();
    assert!(stays_below_early_max(&decaying, 2.0) > 0.0);
    assert!(stays_above_early_min(&decaying, 2.0) < 0.0);
    let rising: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, 1.0 - (-(i as f64)).exp())).collect();
    assert!(stays_above_early_min(&rising, 2.0) > 0.0);
    let v = Verdict::new("x", "y", -1.0);
    assert!(!v.passed);
}

#[test]
fn verdicts_do_not_depend_on_the_choice_of_a() {
    let m = torus(32, |x| 0.2 * x[0].cos() + 0.1 * (2.0 * x[1]).sin(), 1.0);
    let base = FlowConfig { t_end: 4.0, sample_interval: 0.5, tolerance: 1e-7, ..FlowConfig::default() };
    let a = run(&m, &base).unwrap();
    let b = run(&m, &FlowConfig { a_offset: 1.0, ..base }).unwrap();
    assert_ne!(a.records[1].h_grad_sup, b.records[1].h_grad_sup);
    let va: Vec<bool> = monitor_suite(&a.records).iter().map(|v| v.passed).collect();
    let vb: Vec<bool> = monitor_suite(&b.records).iter().map(|v| v.passed).collect();
    assert_eq!(va, vb);
    assert!(va.iter().all(|p| *p));
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(y.a_used.unwrap() - y.u_sup.unwrap() >= 1.0 && x.a_used.unwrap() - x.u_sup.unwrap() >= 1.0);
    }
}

#[test]
fn record_values_round_trip() {
    let cfg = FlowConfig { t_end: 1.0, sample_interval: 0.5, ..FlowConfig::default() };
    for r in run(&exc(2.0), &cfg).unwrap().records {
        assert_eq!(MonitorRecord::from_values(r.t, r.s, &r.values()).unwrap(), r);
    }
}
