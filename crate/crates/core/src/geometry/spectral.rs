//! Multi-dimensional real FFTs on [`TorusGrid`]s.
//!
//! Axis 0 uses a real-to-complex transform (`N/2 + 1` bins), the remaining
//! axes full complex transforms. Plans are cached per axis length.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::TorusGrid;

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut real = RealFftPlanner::<f64>::new();
            let mut complex = FftPlanner::<f64>::new();
            Arc::new(Plans {
                r2c: real.plan_fft_forward(n),
                c2r: real.plan_fft_inverse(n),
                forward: complex.plan_fft_forward(n),
                inverse: complex.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Wavenumber vector of a spectral bin, with a flag marking bins that sit on
/// the Nyquist frequency of any axis.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub k: [f64; 4],
    pub nyquist: bool,
}

impl Mode {
    pub fn max_abs(&self) -> f64 {
        self.k.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Half-complex spectrum of a real field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    data: Vec<Complex64>,
}

impl Spectrum {
    fn half_len(grid: &TorusGrid) -> usize {
        grid.points_per_axis() / 2 + 1
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn forward(grid: &TorusGrid, values: &[f64]) -> Self {
        let n = grid.points_per_axis();
        let m = Self::half_len(grid);
        let lines = grid.len() / n;
        let plans = plans(n);
        let mut data = vec![Complex64::default(); m * lines];
        let mut input = vec![0.0; n];
        let mut scratch = plans.r2c.make_scratch_vec();
        for (line, out) in data.chunks_mut(m).enumerate() {
            input.copy_from_slice(&values[line * n..(line + 1) * n]);
            plans
                .r2c
                .process_with_scratch(&mut input, out, &mut scratch)
                .expect("real fft length mismatch");
        }
        let mut spec = Self { grid: *grid, data };
        spec.complex_passes(&plans.forward);
        spec
    }

    fn complex_passes(&mut self, fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis();
        let m = Self::half_len(&self.grid);
        let mut stride = m;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for _axis in 1..self.grid.real_dim() {
            let block = stride * n;
            let mut buf = vec![Complex64::default(); block];
            for chunk in self.data.chunks_mut(block) {
                // Gather: buf holds `stride` lines of length n back to back.
                for k in 0..n {
                    for i in 0..stride {
                        buf[i * n + k] = chunk[k * stride + i];
                    }
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n {
                    for i in 0..stride {
                        chunk[k * stride + i] = buf[i * n + k];
                    }
                }
            }
            stride = block;
        }
    }

    /// Inverse transform back to grid values (normalized).
    pub fn to_real(&self) -> Vec<f64> {
        let n = self.grid.points_per_axis();
        let m = Self::half_len(&self.grid);
        let plans = plans(n);
        let mut work = self.clone();
        work.complex_passes(&plans.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        let mut out = vec![0.0; self.grid.len()];
        let mut scratch = plans.c2r.make_scratch_vec();
        for (line, spec) in work.data.chunks_mut(m).enumerate() {
            spec[0].im = 0.0;
            spec[m - 1].im = 0.0;
            let dst = &mut out[line * n..(line + 1) * n];
            plans
                .c2r
                .process_with_scratch(spec, dst, &mut scratch)
                .expect("inverse real fft failed");
        }
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    fn mode_of(&self, index: usize) -> Mode {
        let n = self.grid.points_per_axis();
        let m = Self::half_len(&self.grid);
        let mut k = [0.0; 4];
        let i0 = index % m;
        k[0] = i0 as f64;
        let mut nyquist = i0 == n / 2;
        let mut rest = index / m;
        for slot in k.iter_mut().take(self.grid.real_dim()).skip(1) {
            let bin = rest % n;
            rest /= n;
            nyquist |= bin == n / 2;
            *slot = self.grid.wavenumber(bin) as f64;
        }
        Mode { k, nyquist }
    }

    /// Multiplies every bin by `symbol(mode)`.
    pub fn map(&self, symbol: impl Fn(&Mode) -> Complex64) -> Self {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(&self.mode_of(i)))
            .collect();
        Self { grid: self.grid, data }
    }

    /// Applies a derivative symbol and transforms back. The symbol is
    /// evaluated on the wavenumber vector; Nyquist bins are dropped so that
    /// odd derivatives of real fields stay real.
    pub fn derivative(&self, symbol: impl Fn(&[f64; 4]) -> Complex64) -> Vec<f64> {
        self.map(|mode| {
            if mode.nyquist {
                Complex64::default()
            } else {
                symbol(&mode.k)
            }
        })
        .to_real()
    }

    /// Largest coefficient magnitude among bins with `max |k_a| > cutoff`.
    pub fn tail_amplitude(&self, cutoff: f64) -> f64 {
        let norm = 1.0 / self.grid.len() as f64;
        self.data
            .iter()
            .enumerate()
            .filter(|(i, _)| self.mode_of(*i).max_abs() > cutoff)
            .fold(0.0_f64, |acc, (_, c)| acc.max(c.norm() * norm))
    }
}

/// Two-thirds rule: zero every bin with a wavenumber above `N/3` on any axis.
pub fn dealias(grid: &TorusGrid, values: &[f64]) -> Vec<f64> {
    let cutoff = grid.dealias_cutoff() as f64;
    Spectrum::forward(grid, values)
        .map(|mode| {
            if mode.nyquist || mode.max_abs() > cutoff {
                Complex64::default()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .to_real()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_1d_and_2d() {
        for d in [1, 2] {
            let grid = TorusGrid::new(d, 8).unwrap();
            let values: Vec<f64> = (0..grid.len()).map(|i| ((i * 7919) % 101) as f64 * 0.01).collect();
            let back = Spectrum::forward(&grid, &values).to_real();
            for (a, b) in values.iter().zip(&back) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_of_mode() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let f: Vec<f64> = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                (2.0 * c[0] + 3.0 * c[1]).sin()
            })
            .collect();
        let dy = Spectrum::forward(&grid, &f).derivative(|k| Complex64::new(0.0, k[1]));
        for i in 0..grid.len() {
            let c = grid.coords(i);
            assert!((dy[i] - 3.0 * (2.0 * c[0] + 3.0 * c[1]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_removes_high_modes_only() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let f: Vec<f64> = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                c[0].cos() + 0.5 * (12.0 * c[1]).sin()
            })
            .collect();
        let g = dealias(&grid, &f);
        for i in 0..grid.len() {
            assert!((g[i] - grid.coords(i)[0].cos()).abs() < 1e-13);
        }
    }
}
