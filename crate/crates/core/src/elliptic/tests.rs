use super::*;
use crate::geometry::{ma_density, TorusGrid};
use crate::homothety::FactorSpec;
use crate::maflow::TorusFactor;

fn model(n: usize, eta: impl Fn(&[f64; 4]) -> f64 + Sync + Send, c: f64) -> ModelSpec {
    let grid = TorusGrid::new(1, n).unwrap();
    let t = TorusFactor::new(ScalarField::from_fn(grid, eta), ScalarField::zeros(grid), c).unwrap();
    ModelSpec::new(vec![FactorSpec::torus(t)]).unwrap()
}

#[test]
fn trivial_family_is_zero() {
    let m = model(16, |_| 0.0, 1.0);
    for s in [0.0, 1.0, 3.5] {
        let sol = solve_psi(s, &m).unwrap();
        assert!(sol.psi.sup_abs() < 1e-14, "{}", sol.psi.sup_abs());
        let rep = apriori_bound_check(&sol, &m).unwrap();
        assert!(rep.upper_bound.abs() < 1e-14);
        assert!((rep.volume - (2.0 * std::f64::consts::PI).powi(2)).abs() < 1e-12);
    }
}

#[test]
fn constant_volume_family_is_minus_one() {
    let m = model(16, |_| 0.0, std::f64::consts::E);
    for s in [0.0, 2.0, 7.0] {
        let sol = solve_psi(s, &m).unwrap();
        assert!(sol.psi.values().iter().all(|v| (v + 1.0).abs() < 1e-14));
    }
}

#[test]
fn manufactured_solution_is_recovered() {
    let grid = TorusGrid::new(1, 64).unwrap();
    let exact = ScalarField::from_fn(grid, |x| 0.1 * x[0].cos());
    let bg = MetricField::identity(grid);
    let det = ma_density(&bg, &exact).unwrap();
    let rhs = det.ln().axpy(-1.0, &exact).unwrap();
    let out = solve_monge_ampere(&bg, &rhs, ScalarField::zeros(grid), &NewtonOptions::default()).unwrap();
    assert!(out.psi.max_abs_diff(&exact) < 1e-9);
    assert!(out.residual <= 1e-10);
    // Integrated equation: ∫ e^{ψ + rhs} = ∫ det(1 + ψ_{zz̄}) = (2π)².
    let lhs = integrate(&out.psi.zip_map(&rhs, |p, r| (p + r).exp()).unwrap());
    let vol = (2.0 * std::f64::consts::PI).powi(2);
    assert!((lhs - vol).abs() / vol < 1e-10);
}

#[test]
fn newton_converges_quadratically() {
    let m = model(64, |x| 0.1 * x[0].cos() + 0.05 * (x[0] + x[1]).sin(), 1.7);
    let sol = solve_psi(1.0, &m).unwrap();
    assert!(sol.iterations >= 2 && sol.residual <= 1e-10);
    let ratios = sol.quadratic_ratios();
    assert!(!ratios.is_empty() && ratios.iter().all(|r| r.is_finite() && *r < 1e3), "{ratios:?}");
}

#[test]
fn solution_is_unique_from_distinct_guesses() {
    let m = model(64, |x| 0.1 * x[0].cos(), 1.0);
    let grid = *m.torus().unwrap().grid();
    let opts = NewtonOptions::default();
    let sols: Vec<ScalarField> = [0.0, 0.5, -0.5]
        .iter()
        .map(|&c| solve_psi_from(2.0, &m, Some(&ScalarField::constant(grid, c)), &opts).unwrap().psi)
        .collect();
    assert!(sols[0].max_abs_diff(&sols[1]) < 1e-9 && sols[0].max_abs_diff(&sols[2]) < 1e-9);
}

#[test]
fn sweep_satisfies_a_priori_checks() {
    let m = model(64, |x| 0.1 * x[0].cos(), 1.0);
    let s: Vec<f64> = (0..=10).map(f64::from).collect();
    let fam = ComparisonFamily::sweep(&m, &s, &NewtonOptions::default()).unwrap();
    let mut sups = Vec::new();
    for sol in fam.solutions() {
        let rep = apriori_bound_check(sol, &m).unwrap();
        assert!(rep.relative_defect < 1e-10, "s={} defect {}", sol.s, rep.relative_defect);
        assert!(rep.sup_psi <= rep.upper_bound + 1e-8);
        sups.push(sol.psi.sup_abs());
    }
    assert!(sups.iter().all(|v| v.is_finite()));
    assert!(sups.windows(2).skip(1).all(|w| w[1] <= w[0] + 1e-12), "{sups:?}");
    assert!(fam.bound() >= sups[0]);
}

#[test]
fn bump_examples_and_monotonicity() {
    assert_eq!(bump_rho(0.25).unwrap(), 1.0);
    assert_eq!(bump_rho(0.9).unwrap(), 0.0);
    assert!((bump_rho(0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!(bump_rho(-0.1).is_err() && bump_rho(1.1).is_err());
    let mut prev = bump_rho(0.0).unwrap();
    for i in 1..=1000 {
        let v = bump_rho(i as f64 * 1e-3).unwrap();
        assert!(v <= prev);
        prev = v;
    }
}

#[test]
fn interpolant_examples() {
    let m = model(32, |x| 0.1 * x[0].cos(), 1.0);
    let fam = ComparisonFamily::sweep(&m, &[3.0, 4.0], &NewtonOptions::default()).unwrap();
    let (a, b) = (&fam.get(3.0).unwrap().psi, &fam.get(4.0).unwrap().psi);
    assert_eq!(&build_interpolant(2.0, &fam).unwrap().field, a);
    assert_eq!(&build_interpolant(2.9, &fam).unwrap().field, b);
    let mid = build_interpolant(2.5, &fam).unwrap().field;
    for ((p, x), y) in mid.values().iter().zip(a.values()).zip(b.values()) {
        assert!((p - 0.5 * (x + y)).abs() < 1e-15);
        assert!(*p >= x.min(*y) - 1e-15 && *p <= x.max(*y) + 1e-15);
    }
    assert!(matches!(build_interpolant(5.0, &fam), Err(Error::MissingSolution(_))));
    let bound = fam.bound();
    for i in 0..20 {
        let phi = build_interpolant(2.0 + i as f64 * 0.05, &fam).unwrap().field;
        assert!(phi.sup_abs() <= bound + 1e-15);
    }
}
