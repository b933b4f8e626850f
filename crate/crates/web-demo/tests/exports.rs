//! Native calls of the exported functions (success paths only; building a
//! `JsError` needs a JS host).

use krflow_web_demo::{elliptic_solve, product_curvature, torus_flow};

fn json(r: Result<String, wasm_bindgen::JsError>) -> serde_json::Value {
    serde_json::from_str(&r.ok().expect("export succeeds")).unwrap()
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect()
}

#[test]
fn product_matches_closed_form() {
    let v = json(product_curvature(2.0, 20.0, false));
    assert!(v["max_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(floats(&v["r"])[0], -0.5);
    let v = json(product_curvature(2.0, 1e4, true));
    let scaled = floats(&v["scaled"]);
    assert!(scaled.iter().all(|m| (0.5..1.0).contains(m)));
}

#[test]
fn torus_flow_settles() {
    let v = json(torus_flow(16, 2, 5, 6.0));
    let r = floats(&v["r_sup"]);
    assert_eq!(r.len(), floats(&v["t"]).len());
    assert!(r.last().unwrap().abs() < 1e-3 * r[0].abs().max(1e-3));
    assert!(v["r_gap"].as_f64().unwrap() < 1e-8);
}

#[test]
fn elliptic_converges() {
    let v = json(elliptic_solve(1.0, 16, 0.1));
    let res = floats(&v["residuals"]);
    assert!(*res.last().unwrap() < 1e-10);
    assert_eq!(floats(&v["psi"]).len(), 16);
    assert!(v["sup_psi"].as_f64().unwrap() <= v["upper_bound"].as_f64().unwrap() + 1e-8);
}
