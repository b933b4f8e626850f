//! `krflow`: run scenarios, solve the comparison equation, verify, fit and plot.
//!
//! Exit status is 0 when every verdict passes, 1 when some verdict fails and
//! 2 on any error. Outputs go under `$KRFLOW_OUT` (default `krflow-out`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use krflow_core::elliptic::{apriori_bound_check, solve_psi, BoundReport, EllipticSolution};
use krflow_core::harness::{
    fit_decay, format_value, output_root, run_scenario, verify_with, write_report, write_svg, CriterionReport,
    PlotSpec, ScenarioConfig, Series, VerifyOptions,
};
use krflow_core::maflow::Fault;
use krflow_core::Error;

#[derive(Parser)]
#[command(name = "krflow", version, about = "Kähler-Ricci flow lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write series.csv, summary.json and plot.svg.
    Run { config: PathBuf },
    /// Solve the comparison equation at one parameter.
    Elliptic {
        #[arg(long = "s", allow_negative_numbers = true)]
        s: f64,
        config: PathBuf,
    },
    /// Run the acceptance criteria.
    Verify {
        /// Comma-separated criterion ids, e.g. `1,2,8`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Inject a defect; the suite should then fail.
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
        /// Multiplies every step tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Fit `log max|R| = a + b log(1+s)` over a window of an unnormalized series.
    FitDecay {
        series: PathBuf,
        /// `lo:hi` in the s clock.
        #[arg(long)]
        window: String,
    },
    /// Render a series as SVG.
    Plot {
        series: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Columns to draw; defaults to the curvature extremes.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(long)]
        log_log: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FaultArg {
    FlipChiTrace,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::FlipChiTrace => Fault::FlipChiTrace,
        }
    }
}

fn read_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ScenarioConfig::from_json(&text)?)
}

fn cmd_run(config: &Path) -> anyhow::Result<bool> {
    let cfg = read_config(config)?;
    let root = output_root();
    let out = match run_scenario(&cfg, &root) {
        Ok(out) => out,
        Err(e @ Error::StepFailure { .. }) => {
            eprintln!("partial outputs written under {}", root.join(cfg.output_dir()).display());
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    for v in &out.summary.verdicts {
        println!("{} [{}] {} (margin {:.3e})", if v.passed { "PASS" } else { "FAIL" }, v.anchor, v.name, v.margin);
    }
    let stats = &out.summary.stats;
    println!("{} accepted steps, {} rejected; outputs in {}", stats.accepted_steps, stats.rejected_steps, out.dir.display());
    Ok(out.summary.passed)
}

#[derive(Serialize)]
struct EllipticSummary<'a> {
    solution: &'a EllipticSolution,
    quadratic_ratios: Vec<f64>,
    oscillation: f64,
    bound: &'a BoundReport,
    passed: bool,
    config_hash: String,
    seed: Option<u64>,
}

fn cmd_elliptic(s: f64, config: &Path) -> anyhow::Result<bool> {
    let cfg = read_config(config)?;
    let model = cfg.build_model()?;
    let sol = solve_psi(s, &model)?;
    let bound = apriori_bound_check(&sol, &model)?;
    let passed = bound.relative_defect <= 1e-10 && bound.sup_psi <= bound.upper_bound + 1e-8;
    let dir = output_root().join(cfg.output_dir()).join(format!("elliptic-s{s}"));
    std::fs::create_dir_all(&dir)?;

    let grid = *sol.psi.grid();
    let axes = grid.real_dim();
    let mut csv: Vec<String> = (0..axes).map(|k| format!("x{k}")).collect();
    csv.push("psi".into());
    let mut text = csv.join(",") + "\n";
    for (i, v) in sol.psi.values().iter().enumerate() {
        let x = grid.coords(i);
        let mut row: Vec<String> = x[..axes].iter().map(|c| format_value(*c)).collect();
        row.push(format_value(v + sol.offset));
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(dir.join("psi.csv"), text)?;
    let summary = EllipticSummary {
        solution: &sol,
        quadratic_ratios: sol.quadratic_ratios(),
        oscillation: sol.oscillation(),
        bound: &bound,
        passed,
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    std::fs::write(dir.join("elliptic.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    println!(
        "s = {s}: {} Newton steps, residual {:.3e}, osc psi {:.6}, sup psi {:.6} <= {:.6}, relative defect {:.3e}",
        sol.iterations,
        sol.residual,
        sol.oscillation(),
        bound.sup_psi,
        bound.upper_bound,
        bound.relative_defect
    );
    println!("{} outputs in {}", if passed { "PASS" } else { "FAIL" }, dir.display());
    Ok(passed)
}

fn cmd_verify(only: Vec<u8>, fault: Option<FaultArg>, tolerance_scale: f64) -> anyhow::Result<bool> {
    if let Some(bad) = only.iter().find(|&&id| !(1..=9).contains(&id)) {
        bail!("no criterion {bad}; ids run from 1 to 9");
    }
    if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        bail!("tolerance scale must be positive");
    }
    let dir = output_root().join("verify");
    let opts = VerifyOptions { tolerance_scale, fault: fault.map(Fault::from), only, out_dir: dir.clone() };
    let report = verify_with(&opts, |c: &CriterionReport| {
        println!("{}", c.line());
        for check in c.checks.iter().filter(|c| !c.passed) {
            println!("    failed: {} = {:.6e} ({})", check.name, check.value, check.bound);
        }
    });
    let path = write_report(&report, &dir)?;
    println!("report: {}", path.display());
    Ok(report.passed)
}

fn parse_window(text: &str) -> anyhow::Result<[f64; 2]> {
    let (lo, hi) = text.split_once(':').context("window must be lo:hi")?;
    let lo: f64 = lo.trim().parse().with_context(|| format!("bad window start {lo:?}"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("bad window end {hi:?}"))?;
    Ok([lo, hi])
}

fn cmd_fit_decay(series: &Path, window: &str) -> anyhow::Result<bool> {
    let window = parse_window(window)?;
    let data = Series::read(series)?.curvature_decay()?;
    let rep = fit_decay(&data, window)?;
    println!("{}", serde_json::to_string_pretty(&rep)?);
    Ok(true)
}

fn cmd_plot(series: &Path, output: &Path, columns: Vec<String>, log_log: bool) -> anyhow::Result<bool> {
    let series = Series::read(series)?;
    let spec = PlotSpec { columns, log_log };
    write_svg(&series, &spec, output)?;
    println!("wrote {}", output.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Elliptic { s, config } => cmd_elliptic(s, &config),
        Command::Verify { only, fault, tolerance_scale } => cmd_verify(only, fault, tolerance_scale),
        Command::FitDecay { series, window } => cmd_fit_decay(&series, &window),
        Command::Plot { series, output, columns, log_log } => cmd_plot(&series, &output, columns, log_log),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
