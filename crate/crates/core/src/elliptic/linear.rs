use num_complex::Complex64;

use crate::geometry::herm::Block;
use crate::geometry::spectral::Spectrum;
use crate::geometry::{laplacian_with_inverse, MetricField, ScalarField, TorusGrid};
use crate::linsolve::{bicgstab, KrylovOptions, KrylovReport};
use crate::{reduce, Result};

/// The operator `x ↦ αx − βΔ_g x` linearizing `log det(g + ∂∂̄x)` around
/// `g`, with a constant-coefficient spectral preconditioner.
pub(crate) struct Linearization {
    grid: TorusGrid,
    inverse: Vec<Block>,
    alpha: f64,
    beta: f64,
    mean_inverse: f64,
}

impl Linearization {
    pub(crate) fn new(g: &MetricField, alpha: f64, beta: f64) -> Result<Self> {
        let inverse = g.inverse_blocks()?;
        let d = g.dim();
        let traces: Vec<f64> = inverse.iter().map(|b| (0..d).map(|j| b[j * d + j].re).sum::<f64>()).collect();
        let mean_inverse = reduce::tree_mean(&traces) / d as f64;
        Ok(Self { grid: *g.grid(), inverse, alpha, beta, mean_inverse })
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = ScalarField::new(self.grid, x.to_vec())?;
        let lap = laplacian_with_inverse(&f, &self.inverse)?;
        Ok(x.iter().zip(lap.values()).map(|(v, l)| self.alpha * v - self.beta * l).collect())
    }

    pub(crate) fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let c = self.beta * self.mean_inverse * 0.25;
        Spectrum::forward(&self.grid, r)
            .map(|m| {
                let k2: f64 = m.k.iter().map(|k| k * k).sum();
                Complex64::new(1.0 / (self.alpha + c * k2), 0.0)
            })
            .to_real()
    }

    pub(crate) fn solve(&self, rhs: &[f64], options: &KrylovOptions) -> Result<(Vec<f64>, KrylovReport)> {
        bicgstab(|x| self.apply(x), |r| self.precondition(r), rhs, options)
    }
}
