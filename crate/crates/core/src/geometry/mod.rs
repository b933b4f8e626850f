//! Periodic grids, spectral differential operators, Hermitian metric fields
//! and curvature computed directly from a metric.

mod fields;
mod grid;
pub mod herm;
mod operators;
pub mod spectral;

pub use fields::{Density, MetricField, ScalarField};
pub use grid::TorusGrid;
pub use operators::{
    complex_gradient, complex_hessian, gradient_norm_g, gradient_norm_with_inverse, integrate, laplacian_g,
    laplacian_with_inverse, log_det_deviation, log_det_ratio, ma_density, positivity_margin, scalar_curvature_direct, scalar_curvature_perturbed, Integrand,
};
