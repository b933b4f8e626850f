use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform periodic grid on the flat torus `(R / 2πZ)^{2d}` carrying complex
/// coordinates `z_j = x_j + i y_j`.
///
/// Real axes are ordered `(x_1, y_1, x_2, y_2)` and the flat point index is
/// `Σ_a i_a N^a`, so axis 0 (`x_1`) varies fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    complex_dim: usize,
    points_per_axis: usize,
}

impl TorusGrid {
    pub fn new(complex_dim: usize, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&complex_dim) {
            return Err(Error::InvalidGrid(format!(
                "complex dimension must be 1 or 2, got {complex_dim}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self { complex_dim, points_per_axis })
    }

    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points_per_axis as f64
    }

    /// Euclidean measure of the whole torus, `(2π)^{2d}`.
    pub fn total_volume(&self) -> f64 {
        (2.0 * PI).powi(self.real_dim() as i32)
    }

    /// Per-axis integer indices of a flat point index.
    pub fn multi_index(&self, mut index: usize) -> [usize; 4] {
        let n = self.points_per_axis;
        let mut out = [0; 4];
        for slot in out.iter_mut().take(self.real_dim()) {
            *slot = index % n;
            index /= n;
        }
        out
    }

    /// Real coordinates of a point; unused trailing slots are zero.
    pub fn coords(&self, index: usize) -> [f64; 4] {
        let h = self.spacing();
        let mi = self.multi_index(index);
        let mut out = [0.0; 4];
        for a in 0..self.real_dim() {
            out[a] = mi[a] as f64 * h;
        }
        out
    }

    /// Signed wavenumber of a full-length FFT bin.
    pub fn wavenumber(&self, bin: usize) -> i64 {
        let n = self.points_per_axis;
        if bin < n / 2 {
            bin as i64
        } else {
            bin as i64 - n as i64
        }
    }

    /// Largest wavenumber kept by the two-thirds dealiasing rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.points_per_axis / 3) as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(1, 4).is_err());
        assert!(TorusGrid::new(1, 24).is_err());
        assert!(TorusGrid::new(0, 16).is_err());
    }

    #[test]
    fn indexing() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.multi_index(1 + 8 * 3 + 64 * 5 + 512 * 7), [1, 3, 5, 7]);
        let c = g.coords(2);
        assert!((c[0] - 2.0 * g.spacing()).abs() < 1e-15);
        assert_eq!(g.wavenumber(3), 3);
        assert_eq!(g.wavenumber(4), -4);
        assert_eq!(g.wavenumber(7), -1);
        assert!((TorusGrid::new(1, 8).unwrap().total_volume() - 4.0 * PI * PI).abs() < 1e-12);
    }
}
