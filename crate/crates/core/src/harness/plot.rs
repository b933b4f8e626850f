//! Static SVG line plots of monitor columns.

use std::fmt::Write as _;
use std::path::Path;

use super::series::Series;
use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

#[derive(Clone, Debug, Default)]
pub struct PlotSpec {
    /// Columns to draw; empty means `r_sup`/`r_inf` when present, else all.
    pub columns: Vec<String>,
    /// Plot `|value|` against `1 + s` on logarithmic axes.
    pub log_log: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(v: f64, log: bool) -> String {
    if log {
        return format!("1e{}", v.round() as i64);
    }
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1e6).round() / 1e6)
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-300 + 1e-12 * hi.abs().max(lo.abs()) {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let step = ((self.hi - self.lo) / 6.0).ceil().max(1.0);
            let mut t = Vec::new();
            let mut v = self.lo;
            while v <= self.hi + 1e-9 {
                t.push(v);
                v += step;
            }
            t
        } else {
            nice_ticks(self.lo, self.hi)
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

/// Renders the selected columns; fails on an empty selection.
pub fn render_svg(series: &Series, spec: &PlotSpec) -> Result<String> {
    let x_name = if spec.log_log { "s" } else { "t" };
    let xs = series.column(x_name)?;
    let columns: Vec<String> = if !spec.columns.is_empty() {
        spec.columns.clone()
    } else if series.index("r_sup").is_some() && series.index("r_inf").is_some() {
        vec!["r_sup".into(), "r_inf".into()]
    } else {
        series.columns.iter().filter(|c| *c != "t" && *c != "s").cloned().collect()
    };
    let mut lines: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for c in &columns {
        let ys = series.column(c)?;
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .filter_map(|(x, y)| {
                let (x, y) = (x.as_ref()?, y.as_ref()?);
                if spec.log_log {
                    let y = y.abs();
                    (y > 0.0 && *x > -1.0).then(|| (x.ln_1p() / std::f64::consts::LN_10, y.log10()))
                } else {
                    Some((*x, *y))
                }
            })
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        if !pts.is_empty() {
            lines.push((c.clone(), pts));
        }
    }
    if lines.is_empty() {
        return Err(Error::Series("nothing to plot: the series is empty".into()));
    }
    let xa = Axis::fit(lines.iter().flat_map(|l| l.1.iter().map(|p| p.0)), spec.log_log);
    let ya = Axis::fit(lines.iter().flat_map(|l| l.1.iter().map(|p| p.1)), spec.log_log);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + xa.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - ya.frac(v)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, label(t, xa.log));
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, label(t, ya.log));
    }
    let x_label = if spec.log_log { "1 + s" } else { "t" };
    let y_label = match (lines.len(), spec.log_log) {
        (1, false) => escape(&lines[0].0),
        (1, true) => format!("|{}|", escape(&lines[0].0)),
        (_, false) => "value".into(),
        (_, true) => "|value|".into(),
    };
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#, LEFT + 0.5 * pw, HEIGHT - 18.0);
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{y_label}</text>"#,
        TOP + 0.5 * ph,
        TOP + 0.5 * ph
    );
    for (i, (name, pts)) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            path.join(" "),
            escape(name)
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders first so that a failed plot leaves no file behind.
pub fn write_svg(series: &Series, spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render_svg(series, spec)?;
    std::fs::write(path, svg)?;
    Ok(())
}
