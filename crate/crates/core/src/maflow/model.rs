use serde::{Deserialize, Serialize};

use crate::geometry::{complex_hessian, positivity_margin, MetricField, ScalarField, TorusGrid};
use crate::homothety::{ExactKind, FactorSpec};
use crate::{Error, Result};

/// Clock in which a flow is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `∂g/∂t = −Ric(g) − g`.
    Normalized,
    /// `∂g/∂s = −Ric(g)`.
    Unnormalized,
}

/// Flat torus factor discretized on a grid.
///
/// The background form is `ω_0 = flat + i∂∂̄η`. The canonical form vanishes on
/// a torus, so the volume form solving `Ric(Ω) = χ` is the flat density times
/// a constant `c_Ω`.
#[derive(Clone, Debug)]
pub struct TorusFactor {
    eta: ScalarField,
    phi0: ScalarField,
    c_omega: f64,
    omega0: MetricField,
}

impl TorusFactor {
    pub fn new(eta: ScalarField, phi0: ScalarField, c_omega: f64) -> Result<Self> {
        if eta.grid() != phi0.grid() {
            return Err(Error::GridMismatch);
        }
        if !(c_omega.is_finite() && c_omega > 0.0) {
            return Err(Error::InvalidModel(format!("volume constant must be positive, got {c_omega}")));
        }
        eta.check_finite("background potential")?;
        phi0.check_finite("initial potential")?;
        let omega0 = MetricField::identity(*eta.grid()).axpy(1.0, &complex_hessian(&eta)?)?;
        let margin = positivity_margin(&omega0);
        if margin <= 0.0 {
            return Err(Error::InvalidModel(format!("background metric is not positive (margin {margin:.3e})")));
        }
        let start = omega0.axpy(1.0, &complex_hessian(&phi0)?)?;
        let margin = positivity_margin(&start);
        if margin <= 0.0 {
            return Err(Error::InvalidModel(format!("initial metric is not positive (margin {margin:.3e})")));
        }
        Ok(Self { eta, phi0, c_omega, omega0 })
    }

    /// Flat background, zero initial potential.
    pub fn flat(grid: TorusGrid, c_omega: f64) -> Result<Self> {
        Self::new(ScalarField::zeros(grid), ScalarField::zeros(grid), c_omega)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.eta.grid()
    }

    pub fn dim(&self) -> usize {
        self.grid().complex_dim()
    }

    pub fn eta(&self) -> &ScalarField {
        &self.eta
    }

    pub fn phi0(&self) -> &ScalarField {
        &self.phi0
    }

    pub fn c_omega(&self) -> f64 {
        self.c_omega
    }

    pub fn omega0(&self) -> &MetricField {
        &self.omega0
    }

    /// Same factor resampled on another grid; fields are re-evaluated by
    /// the supplied constructors.
    pub fn with_initial_potential(&self, phi0: ScalarField) -> Result<Self> {
        Self::new(self.eta.clone(), phi0, self.c_omega)
    }
}

/// Deliberate defects used to check that the verification suite detects them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Reports `−tr_ω χ` instead of `tr_ω χ`.
    FlipChiTrace,
}

/// Product model: at most one torus factor plus exact homothety factors.
///
/// `n` and `κ` are derived from the factor kinds: `κ` is the total dimension
/// of the negative Kähler-Einstein factors.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    factors: Vec<FactorSpec>,
    fault: Option<Fault>,
}

impl ModelSpec {
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidModel("model has no factors".into()));
        }
        let pde = factors.iter().filter(|f| matches!(f, FactorSpec::TorusPde(_))).count();
        if pde > 1 {
            return Err(Error::InvalidModel("at most one torus PDE factor is supported".into()));
        }
        for f in &factors {
            if let FactorSpec::Exact { dim, a0, .. } = f {
                if *dim == 0 {
                    return Err(Error::InvalidModel("factor dimension must be >= 1".into()));
                }
                if !(a0.is_finite() && *a0 > 0.0) {
                    return Err(Error::InvalidModel(format!("initial coefficient must be positive, got {a0}")));
                }
            }
        }
        Ok(Self { factors, fault: None })
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn fault(&self) -> Option<Fault> {
        self.fault
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    /// Total complex dimension.
    pub fn n(&self) -> usize {
        self.factors.iter().map(FactorSpec::dim).sum()
    }

    /// Kodaira dimension of the product.
    pub fn kappa(&self) -> usize {
        self.factors
            .iter()
            .filter_map(|f| match f {
                FactorSpec::Exact { kind: ExactKind::NegativeKe, dim, .. } => Some(*dim),
                _ => None,
            })
            .sum()
    }

    pub fn torus(&self) -> Option<&TorusFactor> {
        self.factors.iter().find_map(|f| match f {
            FactorSpec::TorusPde(t) => Some(t.as_ref()),
            _ => None,
        })
    }

    /// Exact factors in declaration order as `(kind, dim, a0)`.
    pub fn exact_factors(&self) -> Vec<(ExactKind, usize, f64)> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                FactorSpec::Exact { kind, dim, a0 } => Some((*kind, *dim, *a0)),
                _ => None,
            })
            .collect()
    }

    /// One-line description used in provenance records.
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| match f {
                FactorSpec::Exact { kind, dim, a0 } => format!("{kind:?}(d={dim},a0={a0})"),
                FactorSpec::TorusPde(t) => {
                    format!("TorusPde(d={},N={},c_omega={})", t.dim(), t.grid().points_per_axis(), t.c_omega())
                }
            })
            .collect();
        format!("n={} kappa={} [{}]", self.n(), self.kappa(), parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_dimensions() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let m = ModelSpec::new(vec![
            FactorSpec::ricci_flat(1, 1.0),
            FactorSpec::negative_ke(2, 3.0),
            FactorSpec::torus(TorusFactor::flat(grid, 1.0).unwrap()),
        ])
        .unwrap();
        assert_eq!(m.n(), 4);
        assert_eq!(m.kappa(), 2);
        assert!(m.torus().is_some());
        assert_eq!(m.exact_factors().len(), 2);
    }

    #[test]
    fn rejects_invalid_models() {
        let grid = TorusGrid::new(1, 8).unwrap();
        assert!(ModelSpec::new(vec![]).is_err());
        assert!(ModelSpec::new(vec![FactorSpec::negative_ke(1, -1.0)]).is_err());
        assert!(ModelSpec::new(vec![FactorSpec::negative_ke(0, 1.0)]).is_err());
        let t = || FactorSpec::torus(TorusFactor::flat(grid, 1.0).unwrap());
        assert!(ModelSpec::new(vec![t(), t()]).is_err());
        assert!(TorusFactor::flat(grid, 0.0).is_err());
        let eta = ScalarField::from_fn(grid, |c| 8.0 * c[0].cos());
        assert!(TorusFactor::new(eta, ScalarField::zeros(grid), 1.0).is_err());
    }
}
