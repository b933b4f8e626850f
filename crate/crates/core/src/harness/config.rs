//! JSON scenario files.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{complex_hessian, positivity_margin, MetricField, ScalarField, TorusGrid};
use crate::homothety::FactorSpec;
use crate::maflow::{Fault, FlowConfig, ModelSpec, TorusFactor};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One Fourier mode `c cos(k·x) + s sin(k·x)`; `k` has one entry per real
/// coordinate (two per complex dimension).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Seeded band-limited data: Gaussian amplitudes on `0 < |k| ≤ max_wavenumber`
/// with envelope `(1+|k|²)^{-spectral_decay}`, scaled so the initial metric
/// has least eigenvalue `target_margin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPotential {
    /// Defaults to `N/8`.
    #[serde(default)]
    pub max_wavenumber: Option<i64>,
    #[serde(default = "default_target_margin")]
    pub target_margin: f64,
    #[serde(default = "default_spectral_decay")]
    pub spectral_decay: f64,
}

/// Four derivatives of the potential enter the curvature, so slower decay
/// leaves the top of the band under-resolved at `N = 128`.
fn default_spectral_decay() -> f64 {
    3.0
}

fn default_target_margin() -> f64 {
    0.5
}

/// Least margin accepted for random initial data.
pub const MIN_RANDOM_MARGIN: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Modes(Vec<Mode>),
    Random(RandomPotential),
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Modes(Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorConfig {
    RicciFlat {
        dim: usize,
        #[serde(default = "one")]
        a0: f64,
    },
    NegativeKe {
        dim: usize,
        #[serde(default = "one")]
        a0: f64,
    },
    Torus {
        dim: usize,
        n: usize,
        #[serde(default = "one")]
        c_omega: f64,
        /// Background potential `η`.
        #[serde(default)]
        eta: Vec<Mode>,
        #[serde(default)]
        phi0: PotentialSpec,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub factors: Vec<FactorConfig>,
    #[serde(default)]
    pub fault: Option<Fault>,
}

/// Which checks beyond the stabilization monitors a run performs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Trace inequality on exact factors; skipped without a Kähler-Einstein factor.
    pub schwarz: bool,
    pub sandwich: bool,
    /// `[s_lo, s_hi]` for a decay fit of `max|R̃|`.
    pub decay_window: Option<[f64; 2]>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { schwarz: true, sandwich: true, decay_window: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory under the output root; defaults to the scenario name.
    pub dir: Option<String>,
    pub plot: bool,
    /// Also write the series rescaled to the unnormalized clock.
    pub unnormalized_view: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, plot: true, unnormalized_view: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: ModelConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub monitors: MonitorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid scenario name {:?}", self.name)));
        }
        let random = self
            .model
            .factors
            .iter()
            .any(|f| matches!(f, FactorConfig::Torus { phi0: PotentialSpec::Random(_), .. }));
        if random && self.seed.is_none() {
            return Err(Error::Config("random initial data requested without a seed".into()));
        }
        if let Some([lo, hi]) = self.monitors.decay_window {
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::Config(format!("decay window [{lo}, {hi}] is empty")));
            }
        }
        self.flow.validate()
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    /// Replaces random initial data by the explicit modes it draws, so the
    /// same data can be evaluated on another grid.
    pub fn resolved(&self) -> Result<Self> {
        let mut out = self.clone();
        for f in &mut out.model.factors {
            if let FactorConfig::Torus { dim, n, eta, phi0, .. } = f {
                if let PotentialSpec::Random(spec) = phi0 {
                    let grid = TorusGrid::new(*dim, *n)?;
                    let modes = random_modes(grid, eta, spec, self.seed.expect("validated"))?;
                    *phi0 = PotentialSpec::Modes(modes);
                }
            }
        }
        Ok(out)
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        self.validate()?;
        let resolved = self.resolved()?;
        let mut factors = Vec::new();
        for f in &resolved.model.factors {
            factors.push(match f {
                FactorConfig::RicciFlat { dim, a0 } => FactorSpec::ricci_flat(*dim, *a0),
                FactorConfig::NegativeKe { dim, a0 } => FactorSpec::negative_ke(*dim, *a0),
                FactorConfig::Torus { dim, n, c_omega, eta, phi0 } => {
                    let grid = TorusGrid::new(*dim, *n)?;
                    let phi0 = match phi0 {
                        PotentialSpec::Modes(m) => synthesize(grid, m)?,
                        PotentialSpec::Random(_) => unreachable!("resolved above"),
                    };
                    FactorSpec::torus(TorusFactor::new(synthesize(grid, eta)?, phi0, *c_omega)?)
                }
            });
        }
        let model = ModelSpec::new(factors)?;
        Ok(match resolved.model.fault {
            Some(fault) => model.with_fault(fault),
            None => model,
        })
    }

    pub fn output_dir(&self) -> &str {
        self.output.dir.as_deref().unwrap_or(&self.name)
    }
}

/// Evaluates a mode list on the grid, using exact phase tables.
pub fn synthesize(grid: TorusGrid, modes: &[Mode]) -> Result<ScalarField> {
    let n = grid.points_per_axis() as i64;
    let dims = grid.real_dim();
    for m in modes {
        if m.k.len() != dims {
            return Err(Error::Config(format!("mode {:?} needs {dims} wavenumbers", m.k)));
        }
        if m.k.iter().any(|k| 3 * k.abs() >= n) {
            return Err(Error::Config(format!("mode {:?} is not resolved on an N = {n} grid", m.k)));
        }
    }
    let table: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let a = std::f64::consts::TAU * j as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let values = crate::reduce::map_points(grid.len(), |i| {
        let mi = grid.multi_index(i);
        modes
            .iter()
            .map(|m| {
                let phase = (0..dims).map(|a| m.k[a] * mi[a] as i64).sum::<i64>().rem_euclid(n);
                let (c, s) = table[phase as usize];
                m.cos * c + m.sin * s
            })
            .sum()
    });
    ScalarField::new(grid, values)
}

fn wavevectors(dims: usize, kmax: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut k = vec![-kmax; dims];
    loop {
        // One representative of each ±k pair: the first nonzero entry is positive.
        let first = k.iter().find(|v| **v != 0);
        let norm2: i64 = k.iter().map(|v| v * v).sum();
        if matches!(first, Some(v) if *v > 0) && norm2 <= kmax * kmax {
            out.push(k.clone());
        }
        let mut a = dims;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if k[a] < kmax {
                k[a] += 1;
                break;
            }
            k[a] = -kmax;
        }
    }
}

/// Draws the modes of a [`RandomPotential`] and scales them by bisection on
/// the least eigenvalue of `ω_0 + λ i∂∂̄f`.
pub fn random_modes(grid: TorusGrid, eta: &[Mode], spec: &RandomPotential, seed: u64) -> Result<Vec<Mode>> {
    let kmax = spec.max_wavenumber.unwrap_or(grid.points_per_axis() as i64 / 8);
    if kmax < 1 {
        return Err(Error::Config(format!("max_wavenumber {kmax} leaves no modes")));
    }
    if !(spec.target_margin >= MIN_RANDOM_MARGIN && spec.target_margin < 1.0) {
        return Err(Error::Config(format!(
            "target_margin {} outside [{MIN_RANDOM_MARGIN}, 1)",
            spec.target_margin
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes: Vec<Mode> = wavevectors(grid.real_dim(), kmax)
        .into_iter()
        .map(|k| {
            let envelope = (1.0 + k.iter().map(|v| (v * v) as f64).sum::<f64>()).powf(-spec.spectral_decay);
            let c: f64 = StandardNormal.sample(&mut rng);
            let s: f64 = StandardNormal.sample(&mut rng);
            Mode { k, cos: envelope * c, sin: envelope * s }
        })
        .collect();
    let omega0 = MetricField::identity(grid).axpy(1.0, &complex_hessian(&synthesize(grid, eta)?)?)?;
    let hess = complex_hessian(&synthesize(grid, &modes)?)?;
    let margin = |lambda: f64| -> Result<f64> { Ok(positivity_margin(&omega0.axpy(lambda, &hess)?)) };
    if margin(0.0)? < spec.target_margin {
        return Err(Error::Config(format!(
            "background margin {:.3} is already below the target {}",
            margin(0.0)?,
            spec.target_margin
        )));
    }
    // The margin is concave in λ, so {margin ≥ target} is an interval.
    let mut hi = 1.0;
    while margin(hi)? >= spec.target_margin {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Config("random data has a degenerate Hessian".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? >= spec.target_margin {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for m in &mut modes {
        m.cos *= lo;
        m.sin *= lo;
    }
    Ok(modes)
}

/// Exact Ricci-flat × negative Kähler-Einstein product of complex dimension 2.
pub fn product_scenario(name: &str, a0: f64, flow: FlowConfig) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        seed: None,
        model: ModelConfig {
            factors: vec![FactorConfig::RicciFlat { dim: 1, a0: 1.0 }, FactorConfig::NegativeKe { dim: 1, a0 }],
            fault: None,
        },
        flow,
        monitors: MonitorConfig::default(),
        output: OutputConfig::default(),
    }
}

/// One-dimensional torus with seeded random initial data.
pub fn random_torus_scenario(name: &str, n: usize, max_wavenumber: i64, seed: u64, flow: FlowConfig) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        seed: Some(seed),
        model: ModelConfig {
            factors: vec![FactorConfig::Torus {
                dim: 1,
                n,
                c_omega: 1.0,
                eta: Vec::new(),
                phi0: PotentialSpec::Random(RandomPotential {
                    max_wavenumber: Some(max_wavenumber),
                    target_margin: default_target_margin(),
                    spectral_decay: default_spectral_decay(),
                }),
            }],
            fault: None,
        },
        flow,
        monitors: MonitorConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Fault injected into every model built from the config.
pub fn with_fault(mut cfg: ScenarioConfig, fault: Option<Fault>) -> ScenarioConfig {
    cfg.model.fault = fault;
    cfg
}
