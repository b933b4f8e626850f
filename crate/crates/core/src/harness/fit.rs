//! Power-law decay fits.

use serde::Serialize;

use crate::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares line through `(log(1+s), log value)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFitReport {
    pub slope: f64,
    pub intercept: f64,
    pub window: [f64; 2],
    pub residual_rms: f64,
    pub samples: usize,
}

/// Fits `log value = intercept + slope·log(1+s)` over `lo ≤ s ≤ hi`.
pub fn fit_decay(series: &[(f64, f64)], window: [f64; 2]) -> Result<DecayFitReport> {
    let [lo, hi] = window;
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::Domain { value: lo, domain: "0 <= s_lo < s_hi" });
    }
    let mut points = Vec::new();
    for &(s, v) in series.iter().filter(|p| p.0 >= lo && p.0 <= hi) {
        if !(v > 0.0) {
            return Err(Error::NonpositiveValues { s, value: v });
        }
        points.push((s.ln_1p(), v.ln()));
    }
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::Series(format!(
            "{} samples in [{lo}, {hi}], at least {MIN_FIT_SAMPLES} needed",
            points.len()
        )));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Series("all samples share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DecayFitReport { slope, intercept, window, residual_rms, samples: points.len() })
}
