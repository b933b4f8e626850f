use num_complex::Complex64;

use super::herm::{self, Block};
use super::spectral::Spectrum;
use super::{Density, MetricField, ScalarField, TorusGrid};
use crate::reduce;
use crate::Result;

fn spectrum_of(f: &ScalarField) -> Spectrum {
    // Derivatives annihilate constants; removing the mean first keeps the
    // transform of a constant field exactly zero.
    let mean = f.mean();
    let centered: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
    Spectrum::forward(f.grid(), &centered)
}

fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Complex Hessian `∂_j ∂_k̄ f`, computed spectrally.
///
/// Diagonal entries use `∂_z ∂_z̄ = ¼(∂_x² + ∂_y²)`; the off-diagonal entry
/// of a two-dimensional grid is assembled from its real and imaginary parts,
/// and its transpose is written as the conjugate so the result is Hermitian
/// bit for bit.
pub fn complex_hessian(f: &ScalarField) -> Result<MetricField> {
    f.check_finite("complex_hessian input")?;
    let grid = *f.grid();
    let spec = spectrum_of(f);
    match grid.complex_dim() {
        1 => {
            let e = spec.derivative(|k| real(-0.25 * (k[0] * k[0] + k[1] * k[1])));
            MetricField::from_blocks(grid, e.into_iter().map(|v| [real(v), real(0.0), real(0.0), real(0.0)]).collect())
        }
        _ => {
            let e11 = spec.derivative(|k| real(-0.25 * (k[0] * k[0] + k[1] * k[1])));
            let e22 = spec.derivative(|k| real(-0.25 * (k[2] * k[2] + k[3] * k[3])));
            let re12 = spec.derivative(|k| real(-0.25 * (k[0] * k[2] + k[1] * k[3])));
            let im12 = spec.derivative(|k| real(-0.25 * (k[0] * k[3] - k[1] * k[2])));
            let blocks = (0..grid.len())
                .map(|i| {
                    let off = Complex64::new(re12[i], im12[i]);
                    [real(e11[i]), off, off.conj(), real(e22[i])]
                })
                .collect();
            MetricField::from_blocks(grid, blocks)
        }
    }
}

/// Holomorphic gradient `(∂_{z_1} f, …, ∂_{z_d} f)` with
/// `∂_z = ½(∂_x − i ∂_y)`.
pub fn complex_gradient(f: &ScalarField) -> Result<Vec<[Complex64; 2]>> {
    f.check_finite("complex_gradient input")?;
    let grid = *f.grid();
    let spec = spectrum_of(f);
    let mut out = vec![[Complex64::default(); 2]; grid.len()];
    for j in 0..grid.complex_dim() {
        let fx = spec.derivative(|k| Complex64::new(0.0, k[2 * j]));
        let fy = spec.derivative(|k| Complex64::new(0.0, k[2 * j + 1]));
        for (i, slot) in out.iter_mut().enumerate() {
            slot[j] = Complex64::new(0.5 * fx[i], -0.5 * fy[i]);
        }
    }
    Ok(out)
}

/// Monge-Ampère density `det(g0 + ∂∂̄f)`.
pub fn ma_density(g0: &MetricField, f: &ScalarField) -> Result<Density> {
    let g = g0.axpy(1.0, &complex_hessian(f)?)?;
    g.require_positive()?;
    Density::new(*f.grid(), g.determinant())
}

/// `Δ_g f = g^{jk̄} ∂_j ∂_k̄ f` given precomputed inverse blocks.
pub fn laplacian_with_inverse(f: &ScalarField, inverse: &[Block]) -> Result<ScalarField> {
    let grid = *f.grid();
    let d = grid.complex_dim();
    let hess = complex_hessian(f)?;
    let values = reduce::map_points(grid.len(), |i| herm::trace_product(&inverse[i], hess.block(i), d));
    ScalarField::new(grid, values)
}

pub fn laplacian_g(f: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    laplacian_with_inverse(f, &g.inverse_blocks()?)
}

pub fn gradient_norm_with_inverse(f: &ScalarField, inverse: &[Block]) -> Result<ScalarField> {
    let grid = *f.grid();
    let d = grid.complex_dim();
    let grad = complex_gradient(f)?;
    let values = reduce::map_points(grid.len(), |i| herm::quadratic_form(&inverse[i], &grad[i][..d], d).max(0.0));
    ScalarField::new(grid, values)
}

/// `|∇f|²_g = g^{jk̄} ∂_j f ∂_k̄ f`.
pub fn gradient_norm_g(f: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    gradient_norm_with_inverse(f, &g.inverse_blocks()?)
}

/// `log det g` up to an additive constant, computed as
/// `log1p((det g − m)/m)` with `m` the mean determinant so that values stay
/// small and rounding stays relative to the spatial variation.
pub fn log_det_deviation(g: &MetricField) -> Result<ScalarField> {
    g.require_positive()?;
    let det = g.determinant();
    let m = reduce::tree_mean(&det);
    let values = det.iter().map(|&v| ((v - m) / m).ln_1p()).collect();
    let out = ScalarField::new(*g.grid(), values)?;
    out.check_finite("log det")?;
    Ok(out)
}

/// Scalar curvature `R = g^{jk̄} R_{jk̄}` with `R_{jk̄} = −∂_j∂_k̄ log det g`.
pub fn scalar_curvature_direct(g: &MetricField) -> Result<ScalarField> {
    let inverse = g.inverse_blocks()?;
    let ricci_potential = log_det_deviation(g)?.dealiased();
    let lap = laplacian_with_inverse(&ricci_potential, &inverse)?;
    let r = lap.scaled(-1.0);
    r.check_finite("scalar curvature")?;
    Ok(r)
}

/// `log det(base + pert) − log det base`, evaluated as `log1p` of
/// `det(I + B) − 1` with `B = base⁻¹ pert`, so a small perturbation keeps its
/// relative precision instead of being rounded against the base.
pub fn log_det_ratio(base: &MetricField, pert: &MetricField) -> Result<ScalarField> {
    let grid = *base.grid();
    let d = grid.complex_dim();
    base.axpy(1.0, pert)?.require_positive()?;
    let inverse = base.inverse_blocks()?;
    let base_det = base.determinant();
    let values = reduce::map_points(grid.len(), |i| {
        let p = pert.block(i);
        let excess = match d {
            1 => herm::trace_product(&inverse[i], p, d),
            _ => herm::trace_product(&inverse[i], p, d) + herm::det(p, d) / base_det[i],
        };
        excess.ln_1p()
    });
    let out = ScalarField::new(grid, values)?;
    out.check_finite("log det ratio")?;
    Ok(out)
}

/// Scalar curvature of `base + pert`, with the Ricci potential assembled
/// from [`log_det_ratio`].
pub fn scalar_curvature_perturbed(base: &MetricField, pert: &MetricField) -> Result<ScalarField> {
    let g = base.axpy(1.0, pert)?;
    let inverse = g.inverse_blocks()?;
    let ricci_potential = log_det_deviation(base)?.axpy(1.0, &log_det_ratio(base, pert)?)?.dealiased();
    let r = laplacian_with_inverse(&ricci_potential, &inverse)?.scaled(-1.0);
    r.check_finite("scalar curvature")?;
    Ok(r)
}

/// Smallest eigenvalue of `g` over the grid.
pub fn positivity_margin(g: &MetricField) -> f64 {
    reduce::inf(&g.min_eigenvalues())
}

/// Anything that can be integrated against the Euclidean cell measure.
pub trait Integrand {
    fn torus(&self) -> &TorusGrid;
    fn samples(&self) -> &[f64];
}

impl Integrand for ScalarField {
    fn torus(&self) -> &TorusGrid {
        self.grid()
    }
    fn samples(&self) -> &[f64] {
        self.values()
    }
}

impl Integrand for Density {
    fn torus(&self) -> &TorusGrid {
        self.grid()
    }
    fn samples(&self) -> &[f64] {
        self.values()
    }
}

/// Periodic trapezoidal rule (spectrally exact for band-limited data).
pub fn integrate<I: Integrand + ?Sized>(f: &I) -> f64 {
    reduce::tree_mean(f.samples()) * f.torus().total_volume()
}
