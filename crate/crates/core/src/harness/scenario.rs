//! Running a scenario file end to end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ScenarioConfig;
use super::fit::{fit_decay, DecayFitReport};
use super::plot::{write_svg, PlotSpec};
use super::series::{write_records, Series};
use crate::estimates::{monitor_suite, no_late_growth, schwarz_inequality_check, MonitorRecord, Verdict};
use crate::maflow::{rescale_to_unnormalized, run, volume_sandwich_check, Frame, ModelSpec, RunStats, Trajectory};
use crate::{Error, Result};

/// Environment variable naming the output root directory.
pub const OUT_ENV: &str = "KRFLOW_OUT";

/// Tolerance of the pointwise identity between the two curvature evaluations.
pub const SCALEX_TOLERANCE: f64 = 1e-6;

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("krflow-out"))
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryProvenance {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub model: String,
    pub crate_version: &'static str,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    /// `complete`, or `partial` when the flow stopped early.
    pub status: &'static str,
    pub error: Option<String>,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    pub constants: BTreeMap<String, f64>,
    pub decay_fit: Option<DecayFitReport>,
    pub stats: RunStats,
    pub provenance: SummaryProvenance,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub trajectory: Trajectory,
    pub summary: Summary,
    pub dir: PathBuf,
}

fn extreme(records: &[MonitorRecord], f: impl Fn(&MonitorRecord) -> Option<f64>, max: bool) -> Option<f64> {
    let vals: Vec<f64> = records.iter().filter_map(f).collect();
    if vals.is_empty() {
        return None;
    }
    Some(if max { vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) } else { vals.iter().copied().fold(f64::INFINITY, f64::min) })
}

/// Extremes of every column over the run.
pub fn observed_constants(records: &[MonitorRecord]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let mut put = |name: &str, v: Option<f64>| {
        if let Some(v) = v {
            out.insert(name.to_string(), v);
        }
    };
    put("sup_abs_r", extreme(records, |r| Some(r.sup_abs_r()), true));
    put("r_inf_min", extreme(records, |r| Some(r.r_inf), false));
    put("r_gap_max", extreme(records, |r| Some(r.r_gap), true));
    put("phi_sup_max", extreme(records, |r| r.phi_sup, true));
    put("phi_inf_min", extreme(records, |r| r.phi_inf, false));
    put("phidot_sup_max", extreme(records, |r| r.phidot_sup, true));
    put("phidot_inf_min", extreme(records, |r| r.phidot_inf, false));
    put("trace_chi_sup_max", extreme(records, |r| Some(r.trace_chi_sup), true));
    put("grad_u_sup_max", extreme(records, |r| Some(r.grad_u_sup), true));
    put("neg_lap_u_sup_max", extreme(records, |r| Some(r.neg_lap_u_sup), true));
    put("h_grad_sup_max", extreme(records, |r| r.h_grad_sup, true));
    put("k_sup_max", extreme(records, |r| r.k_sup, true));
    put("h_schwarz_sup_max", extreme(records, |r| r.h_schwarz_sup, true));
    put("m_vol_inf_min", extreme(records, |r| r.m_vol_inf, false));
    put("positivity_margin_min", extreme(records, |r| Some(r.positivity_margin), false));
    put("a_used_max", extreme(records, |r| r.a_used, true));
    out
}

/// `(s, max|R̃|)` of a trajectory, rescaling a normalized one.
pub fn decay_series(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let view = match traj.frame {
        Frame::Unnormalized => traj.clone(),
        Frame::Normalized => rescale_to_unnormalized(traj.clone())?,
    };
    Ok(view.records.iter().map(|r| (r.clock(), r.sup_abs_r())).collect())
}

/// Every verdict a scenario produces, plus the constants they observed.
pub fn scenario_verdicts(
    traj: &Trajectory,
    model: &ModelSpec,
    cfg: &ScenarioConfig,
) -> (Vec<Verdict>, BTreeMap<String, f64>, Option<DecayFitReport>) {
    let records = &traj.records;
    let mut constants = observed_constants(records);
    let mut verdicts = match traj.frame {
        Frame::Normalized => monitor_suite(records),
        Frame::Unnormalized => {
            let scaled: Vec<(f64, f64)> = records.iter().map(|r| (r.clock(), (1.0 + r.clock()) * r.sup_abs_r())).collect();
            vec![Verdict::new("(1+s) sup |R| no late growth", "curvature decay", no_late_growth(&scaled))]
        }
    };
    if let Some(gap) = constants.get("r_gap_max") {
        verdicts.push(Verdict::new("curvature from u matches direct curvature", "curvature identity", SCALEX_TOLERANCE - gap));
    }
    if cfg.monitors.schwarz && model.kappa() > 0 {
        let v = match schwarz_inequality_check(traj, model) {
            Ok(rep) => {
                constants.insert("schwarz_min_slack".into(), rep.min_slack);
                Verdict::new("trace inequality with C = 0", "Schwarz estimate", rep.min_slack)
            }
            Err(Error::InequalityViolation { slack, .. }) => Verdict::new("trace inequality with C = 0", "Schwarz estimate", slack),
            Err(e) => Verdict { margin: f64::NAN, ..Verdict::new(format!("trace inequality: {e}"), "Schwarz estimate", -1.0) },
        };
        verdicts.push(v);
    }
    if cfg.monitors.sandwich {
        let times: Vec<f64> = records.iter().map(|r| r.t).collect();
        let v = match volume_sandwich_check(model, &times) {
            Ok(rep) => {
                constants.insert("sandwich_c1".into(), rep.c1);
                // Relative, with the rounding allowance of the check itself.
                let margin = 1.0 + 1e-12 - rep.lower_constant.max(rep.upper_constant) / rep.c1;
                Verdict::new("volume sandwich", "potential and velocity bounds", margin)
            }
            Err(e) => Verdict { margin: f64::NAN, ..Verdict::new(format!("volume sandwich: {e}"), "potential and velocity bounds", -1.0) },
        };
        verdicts.push(v);
    }
    let mut fit = None;
    if let Some(window) = cfg.monitors.decay_window {
        let v = match decay_series(traj).and_then(|s| fit_decay(&s, window)) {
            Ok(rep) => {
                constants.insert("decay_slope".into(), rep.slope);
                // A finite window of C/(c+s) fits a slope O(1/s_lo) above -1.
                let margin = -1.0 + 1e-2 - rep.slope;
                fit = Some(rep);
                Verdict::new("max |R| decays like (1+s)^-1 or faster", "curvature decay", margin)
            }
            Err(e) => Verdict { margin: f64::NAN, ..Verdict::new(format!("decay fit: {e}"), "curvature decay", -1.0) },
        };
        verdicts.push(v);
    }
    (verdicts, constants, fit)
}

fn write_outputs(cfg: &ScenarioConfig, traj: &Trajectory, summary: &Summary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = write_records(&traj.records);
    std::fs::write(dir.join("series.csv"), &csv)?;
    if cfg.output.unnormalized_view && traj.frame == Frame::Normalized {
        let view = rescale_to_unnormalized(traj.clone())?;
        std::fs::write(dir.join("series_unnormalized.csv"), write_records(&view.records))?;
    }
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    if cfg.output.plot && !traj.records.is_empty() {
        write_svg(&Series::parse(&csv)?, &PlotSpec::default(), &dir.join("plot.svg"))?;
    }
    Ok(())
}

/// Runs a scenario and writes `series.csv`, `summary.json` and `plot.svg`
/// under `root`. A flow failure still writes the partial series, flagged in
/// the summary, and is then returned as the error.
pub fn run_scenario(cfg: &ScenarioConfig, root: &Path) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let dir = root.join(cfg.output_dir());
    let provenance = SummaryProvenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        model: model.summary(),
        crate_version: env!("CARGO_PKG_VERSION"),
    };
    let (traj, failure) = match run(&model, &cfg.flow) {
        Ok(t) => (t, None),
        Err(Error::StepFailure { t, dt, reason, partial: Some(p) }) => {
            let traj = (*p).clone();
            (traj, Some(Error::StepFailure { t, dt, reason, partial: Some(p) }))
        }
        Err(e) => return Err(e),
    };
    let (verdicts, constants, decay_fit) = scenario_verdicts(&traj, &model, cfg);
    let summary = Summary {
        schema_version: cfg.schema_version,
        name: cfg.name.clone(),
        status: if failure.is_some() { "partial" } else { "complete" },
        error: failure.as_ref().map(|e| e.to_string()),
        passed: failure.is_none() && verdicts.iter().all(|v| v.passed),
        verdicts,
        constants,
        decay_fit,
        stats: traj.stats,
        provenance,
    };
    write_outputs(cfg, &traj, &summary, &dir)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(ScenarioOutcome { trajectory: traj, summary, dir }),
    }
}
