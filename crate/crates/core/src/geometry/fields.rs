use num_complex::Complex64;

use super::{herm, TorusGrid};
use crate::reduce;
use crate::{Error, Result};

/// Real function sampled on a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x_1, y_1, x_2, y_2)` at the grid points.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64; 4]) -> f64 + Sync + Send) -> Self {
        let values = reduce::map_points(grid.len(), |i| f(&grid.coords(i)));
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + scale * b)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn sup(&self) -> f64 {
        reduce::sup(&self.values)
    }

    pub fn inf(&self) -> f64 {
        reduce::inf(&self.values)
    }

    pub fn sup_abs(&self) -> f64 {
        reduce::sup_abs(&self.values)
    }

    pub fn mean(&self) -> f64 {
        reduce::tree_mean(&self.values)
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    /// Applies the two-thirds dealiasing filter. The mean is split off first
    /// so constant fields pass through bit for bit.
    pub fn dealiased(&self) -> Self {
        let mean = self.mean();
        let centered: Vec<f64> = self.values.iter().map(|v| v - mean).collect();
        let values = super::spectral::dealias(&self.grid, &centered).into_iter().map(|v| v + mean).collect();
        Self { grid: self.grid, values }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Positive volume density relative to the Euclidean cell measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Density {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonFinite { what: "density", index });
        }
        Ok(Self { grid, values })
    }

    /// Flat density scaled by `c`.
    pub fn flat(grid: TorusGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn as_field(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.clone() }
    }

    pub fn ln(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| v.ln()).collect() }
    }
}

/// Field of Hermitian `d×d` matrices `g_{jk̄}`, stored row-major per point.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    grid: TorusGrid,
    entries: Vec<Complex64>,
}

impl MetricField {
    pub fn from_blocks(grid: TorusGrid, blocks: Vec<herm::Block>) -> Result<Self> {
        if blocks.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let d = grid.complex_dim();
        let mut entries = Vec::with_capacity(grid.len() * d * d);
        for b in &blocks {
            entries.extend_from_slice(&b[..d * d]);
        }
        Ok(Self { grid, entries })
    }

    pub fn identity(grid: TorusGrid) -> Self {
        Self::scalar(&ScalarField::constant(grid, 1.0))
    }

    /// Conformally flat metric `c(x)·I`.
    pub fn scalar(c: &ScalarField) -> Self {
        let grid = *c.grid();
        let d = grid.complex_dim();
        let mut entries = vec![Complex64::default(); grid.len() * d * d];
        for (i, &v) in c.values().iter().enumerate() {
            for j in 0..d {
                entries[i * d * d + j * d + j] = Complex64::new(v, 0.0);
            }
        }
        Self { grid, entries }
    }

    /// Diagonal metric with real entries given per complex direction.
    pub fn diagonal(diag: &[ScalarField]) -> Result<Self> {
        let grid = *diag[0].grid();
        let d = grid.complex_dim();
        if diag.len() != d || diag.iter().any(|f| f.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        let mut entries = vec![Complex64::default(); grid.len() * d * d];
        for i in 0..grid.len() {
            for (j, f) in diag.iter().enumerate() {
                entries[i * d * d + j * d + j] = Complex64::new(f.values()[i], 0.0);
            }
        }
        Ok(Self { grid, entries })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        let d = grid.complex_dim();
        Self { grid, entries: vec![Complex64::default(); grid.len() * d * d] }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.complex_dim()
    }

    pub fn block(&self, index: usize) -> &[Complex64] {
        let dd = self.dim() * self.dim();
        &self.entries[index * dd..(index + 1) * dd]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Entry `(j, k)` as a real field (real part).
    pub fn entry_re(&self, j: usize, k: usize) -> ScalarField {
        let d = self.dim();
        let values = (0..self.grid.len()).map(|i| self.entries[i * d * d + j * d + k].re).collect();
        ScalarField { grid: self.grid, values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, entries: self.entries.iter().map(|v| v * c).collect() }
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b * scale).collect();
        Ok(Self { grid: self.grid, entries })
    }

    pub fn determinant(&self) -> Vec<f64> {
        let d = self.dim();
        reduce::map_points(self.grid.len(), |i| herm::det(self.block(i), d))
    }

    pub fn min_eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        reduce::map_points(self.grid.len(), |i| herm::min_eigenvalue(self.block(i), d))
    }

    /// Fails with [`Error::PositivityLost`] at the worst point when the
    /// metric is not positive definite everywhere.
    pub fn require_positive(&self) -> Result<()> {
        let (index, min_eigenvalue) = reduce::argmin(&self.min_eigenvalues());
        if min_eigenvalue > 0.0 && min_eigenvalue.is_finite() {
            Ok(())
        } else {
            Err(Error::PositivityLost { min_eigenvalue, index })
        }
    }

    /// Pointwise inverse blocks; requires positivity.
    pub fn inverse_blocks(&self) -> Result<Vec<herm::Block>> {
        self.require_positive()?;
        let d = self.dim();
        Ok(reduce::map_points(self.grid.len(), |i| herm::inverse(self.block(i), d)))
    }

    /// Largest deviation from exact Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..self.grid.len() {
            let b = self.block(i);
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((b[j * d + k] - b[k * d + j].conj()).norm());
                }
            }
        }
        worst
    }
}
