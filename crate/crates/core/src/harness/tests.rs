use super::*;
use crate::geometry::{complex_hessian, positivity_margin, MetricField, TorusGrid};
use crate::maflow::FlowConfig;
use crate::Error;

fn scratch(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("krflow-harness-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn flat_torus(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        seed: None,
        model: ModelConfig {
            factors: vec![FactorConfig::Torus { dim: 1, n: 16, c_omega: 1.0, eta: vec![], phi0: PotentialSpec::default() }],
            fault: None,
        },
        flow: FlowConfig { t_end: 1.0, sample_interval: 0.25, ..FlowConfig::default() },
        monitors: MonitorConfig::default(),
        output: OutputConfig::default(),
    }
}

#[test]
fn stationary_scenario_has_zero_curvature() {
    let root = scratch("flat");
    let out = run_scenario(&flat_torus("flat"), &root).unwrap();
    let series = Series::read(&out.dir.join("series.csv")).unwrap();
    for name in ["r_sup", "r_inf", "r_gap"] {
        assert!(series.column(name).unwrap().iter().all(|v| *v == Some(0.0)));
    }
    assert!(out.summary.passed);
    assert!(out.dir.join("plot.svg").exists());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(summary["status"], "complete");
}

#[test]
fn product_scenario_starts_at_minus_half() {
    let flow = FlowConfig { t_end: 1.0, sample_interval: 0.5, tolerance: 1e-12, ..FlowConfig::default() };
    let out = run_scenario(&product_scenario("exc", 2.0, flow), &scratch("exc")).unwrap();
    let text = std::fs::read_to_string(out.dir.join("series.csv")).unwrap();
    let series = Series::parse(&text).unwrap();
    assert_eq!(series.column("r_inf").unwrap()[0], Some(-0.5));
    assert_eq!(series.column("r_sup").unwrap()[0], Some(-0.5));
    assert!(series.index("s").is_none());
    assert!(out.summary.verdicts.iter().any(|v| v.anchor == "Schwarz estimate" && v.passed));
}

#[test]
fn seeded_random_scenario_replays_byte_for_byte() {
    let flow = FlowConfig { t_end: 0.5, sample_interval: 0.25, tolerance: 1e-6, ..FlowConfig::default() };
    let cfg = random_torus_scenario("rnd", 32, 4, 11, flow);
    let a = run_scenario(&cfg, &scratch("rnd-a")).unwrap();
    let b = run_scenario(&cfg, &scratch("rnd-b")).unwrap();
    for f in ["series.csv", "summary.json", "plot.svg"] {
        assert_eq!(std::fs::read(a.dir.join(f)).unwrap(), std::fs::read(b.dir.join(f)).unwrap(), "{f}");
    }
    let other = run_scenario(&ScenarioConfig { seed: Some(12), ..cfg }, &scratch("rnd-c")).unwrap();
    assert_ne!(a.summary.provenance.config_hash, other.summary.provenance.config_hash);
    assert_ne!(std::fs::read(a.dir.join("series.csv")).unwrap(), std::fs::read(other.dir.join("series.csv")).unwrap());
}

#[test]
fn random_data_meets_the_margin_and_band_limit() {
    let grid = TorusGrid::new(1, 64).unwrap();
    let spec = RandomPotential { max_wavenumber: None, target_margin: 0.5, spectral_decay: 2.0 };
    let modes = random_modes(grid, &[], &spec, 3).unwrap();
    assert_eq!(modes, random_modes(grid, &[], &spec, 3).unwrap());
    assert!(modes.iter().all(|m| m.k.iter().map(|k| k * k).sum::<i64>() <= 64));
    let phi = synthesize(grid, &modes).unwrap();
    let margin = positivity_margin(&MetricField::identity(grid).axpy(1.0, &complex_hessian(&phi).unwrap()).unwrap());
    assert!((margin - 0.5).abs() < 1e-9 && margin >= MIN_RANDOM_MARGIN);
    assert!(phi.mean().abs() < 1e-14);
}

#[test]
fn synthesized_modes_match_direct_evaluation() {
    let grid = TorusGrid::new(1, 16).unwrap();
    let modes = vec![Mode { k: vec![1, -2], cos: 0.3, sin: -0.1 }];
    let f = synthesize(grid, &modes).unwrap();
    for (i, v) in f.values().iter().enumerate() {
        let x = grid.coords(i);
        let a = x[0] - 2.0 * x[1];
        assert!((v - (0.3 * a.cos() - 0.1 * a.sin())).abs() < 1e-14);
    }
    assert!(synthesize(grid, &[Mode { k: vec![6, 0], cos: 1.0, sin: 0.0 }]).is_err());
    assert!(synthesize(grid, &[Mode { k: vec![1], cos: 1.0, sin: 0.0 }]).is_err());
}

#[test]
fn config_validation() {
    let mut cfg = random_torus_scenario("x", 16, 2, 1, FlowConfig::default());
    cfg.seed = None;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let mut cfg = flat_torus("x");
    cfg.schema_version = 2;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    assert!(ScenarioConfig::from_json(r#"{"schema_version": 1, "name": "a", "model": {"factors": []}, "bogus": 1}"#).is_err());
    let json = flat_torus("round").to_json();
    assert_eq!(ScenarioConfig::from_json(&json).unwrap(), flat_torus("round"));
    let text = r#"{
        "schema_version": 1, "name": "t", "seed": 5,
        "model": {"factors": [
            {"kind": "torus", "dim": 1, "n": 32, "phi0": {"random": {"max_wavenumber": 3}}},
            {"kind": "negative_ke", "dim": 1, "a0": 2.0}
        ]},
        "flow": {"t_end": 1.0}
    }"#;
    let cfg = ScenarioConfig::from_json(text).unwrap();
    assert_eq!(cfg.build_model().unwrap().n(), 2);
}

#[test]
fn csv_round_trips_every_float() {
    let flow = FlowConfig { t_end: 2.0, sample_interval: 0.5, tolerance: 1e-6, ..FlowConfig::default() };
    let cfg = random_torus_scenario("csv", 16, 2, 4, flow);
    let traj = crate::maflow::run(&cfg.build_model().unwrap(), &cfg.flow).unwrap();
    let text = write_records(&traj.records);
    assert_eq!(Series::parse(&text).unwrap().records().unwrap(), traj.records);
    let un = crate::maflow::rescale_to_unnormalized(traj).unwrap();
    let text = write_records(&un.records);
    assert!(text.starts_with("t,s,phi_sup"));
    assert_eq!(Series::parse(&text).unwrap().records().unwrap(), un.records);
    for v in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, f64::MIN_POSITIVE] {
        assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
    }
}

#[test]
fn malformed_series_are_rejected() {
    assert!(matches!(Series::parse(""), Err(Error::Series(_))));
    assert!(matches!(Series::parse("t,x\n1,2,3\n"), Err(Error::Series(_))));
    assert!(matches!(Series::parse("t,x\n1,abc\n"), Err(Error::Series(_))));
    assert!(Series::parse("t,x\n1,\n").unwrap().column("x").unwrap()[0].is_none());
}

#[test]
fn decay_fit_examples() {
    let s: Vec<f64> = (0..=1000).map(|i| 100.0 + 9.9 * i as f64).collect();
    let exact: Vec<(f64, f64)> = s.iter().map(|&s| (s, 1.0 / (2.0 + s))).collect();
    let rep = fit_decay(&exact, [1e2, 1e4]).unwrap();
    assert!((rep.slope + 1.0).abs() < 1e-3, "{}", rep.slope);
    assert_eq!(rep.samples, 1001);
    let flat: Vec<(f64, f64)> = s.iter().map(|&s| (s, 0.7)).collect();
    assert!(fit_decay(&flat, [1e2, 1e4]).unwrap().slope.abs() < 1e-12);
    let power: Vec<(f64, f64)> = s.iter().map(|&s| (s, 3.0 / (1.0 + s))).collect();
    let rep = fit_decay(&power, [1e2, 1e4]).unwrap();
    assert!((rep.slope + 1.0).abs() < 1e-12 && (rep.intercept - 3f64.ln()).abs() < 1e-10 && rep.residual_rms < 1e-12);
    let bad: Vec<(f64, f64)> = s.iter().map(|&s| (s, if s > 500.0 && s < 600.0 { 0.0 } else { 1.0 })).collect();
    assert!(matches!(fit_decay(&bad, [1e2, 1e4]), Err(Error::NonpositiveValues { .. })));
    assert!(fit_decay(&exact[..5], [1e2, 1e4]).is_err());
    assert!(fit_decay(&exact, [1e4, 1e2]).is_err());
}

#[test]
fn plots_are_valid_svg() {
    let series = Series::parse("t,r_sup\n0,1\n1,0.5\n2,0.25\n").unwrap();
    let svg = render_svg(&series, &PlotSpec::default()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 1);
    assert!(doc.descendants().any(|n| n.has_tag_name("text") && n.text() == Some("r_sup")));
    assert!(doc.descendants().any(|n| n.has_tag_name("text") && n.text() == Some("t")));

    let dir = scratch("plot");
    std::fs::create_dir_all(&dir).unwrap();
    let empty = Series::parse("t,r_sup\n").unwrap();
    let path = dir.join("empty.svg");
    assert!(write_svg(&empty, &PlotSpec::default(), &path).is_err());
    assert!(!path.exists());

    let un = Series::parse("t,s,r_sup,r_inf\n0,0,-0.5,-0.5\n1,1.718,-0.2,-0.2\n2,6.389,-0.05,-0.05\n").unwrap();
    let svg = render_svg(&un, &PlotSpec { columns: vec![], log_log: true }).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 2);
}

#[test]
fn fault_fails_the_curvature_identity_in_a_scenario() {
    let flow = FlowConfig { t_end: 1.0, sample_interval: 0.5, tolerance: 1e-12, ..FlowConfig::default() };
    let cfg = with_fault(product_scenario("fault", 2.0, flow), Some(crate::maflow::Fault::FlipChiTrace));
    let out = run_scenario(&cfg, &scratch("fault")).unwrap();
    assert!(!out.summary.passed);
    let failed: Vec<&str> = out.summary.verdicts.iter().filter(|v| !v.passed).map(|v| v.anchor.as_str()).collect();
    assert!(failed.contains(&"curvature identity") && failed.contains(&"Schwarz estimate"), "{failed:?}");
}

#[test]
fn unnormalized_scenario_fits_decay() {
    let flow = FlowConfig {
        frame: crate::maflow::Frame::Unnormalized,
        t_end: 1e3,
        sample_interval: 5.0,
        tolerance: 1e-12,
        dt_max: 50.0,
        ..FlowConfig::default()
    };
    let mut cfg = product_scenario("decay", 2.0, flow);
    cfg.monitors.decay_window = Some([1e2, 1e3]);
    let out = run_scenario(&cfg, &scratch("decay")).unwrap();
    let fit = out.summary.decay_fit.as_ref().unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-2);
    assert!(out.summary.passed, "{:?}", out.summary.verdicts);
    let series = Series::read(&out.dir.join("series.csv")).unwrap();
    assert_eq!(series.columns[1], "s");
    assert!(series.curvature_decay().unwrap().len() > 100);
}

#[test]
fn quick_criteria_pass_and_detect_the_fault() {
    let opts = VerifyOptions { only: vec![1, 8], out_dir: scratch("verify"), ..VerifyOptions::default() };
    let rep = verify_all(&opts);
    assert!(rep.passed, "{:#?}", rep.criteria);
    let faulty = verify_all(&VerifyOptions { fault: Some(crate::maflow::Fault::FlipChiTrace), ..opts });
    assert!(faulty.criteria.iter().all(|c| !c.passed));
    let path = write_report(&rep, &scratch("report")).unwrap();
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(back["criteria"].as_array().unwrap().len(), 2);
}
