//! Pointwise algebra on 1×1 and 2×2 Hermitian matrices stored row-major.

use num_complex::Complex64;

pub type Block = [Complex64; 4];

pub fn zero() -> Block {
    [Complex64::default(); 4]
}

pub fn det(m: &[Complex64], d: usize) -> f64 {
    match d {
        1 => m[0].re,
        _ => m[0].re * m[3].re - m[1].norm_sqr(),
    }
}

pub fn min_eigenvalue(m: &[Complex64], d: usize) -> f64 {
    match d {
        1 => m[0].re,
        _ => {
            let (a, c) = (m[0].re, m[3].re);
            let half_gap = 0.5 * (a - c);
            0.5 * (a + c) - (half_gap * half_gap + m[1].norm_sqr()).sqrt()
        }
    }
}

/// Inverse of a nonsingular Hermitian block.
pub fn inverse(m: &[Complex64], d: usize) -> Block {
    let mut out = zero();
    match d {
        1 => out[0] = Complex64::new(1.0 / m[0].re, 0.0),
        _ => {
            let inv_det = 1.0 / det(m, 2);
            out[0] = Complex64::new(m[3].re * inv_det, 0.0);
            out[3] = Complex64::new(m[0].re * inv_det, 0.0);
            out[1] = -m[1] * inv_det;
            out[2] = -m[2] * inv_det;
        }
    }
    out
}

/// `Re tr(A B)`.
pub fn trace_product(a: &[Complex64], b: &[Complex64], d: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..d {
        for k in 0..d {
            acc += (a[j * d + k] * b[k * d + j]).re;
        }
    }
    acc
}

/// `v^H A v` for Hermitian `A`.
pub fn quadratic_form(a: &[Complex64], v: &[Complex64], d: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..d {
        for k in 0..d {
            acc += (v[j].conj() * a[j * d + k] * v[k]).re;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two() {
        let m = [c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)];
        assert!((det(&m, 2) - 1.5).abs() < 1e-15);
        let inv = inverse(&m, 2);
        // m * inv = identity
        for j in 0..2 {
            for k in 0..2 {
                let mut s = Complex64::default();
                for l in 0..2 {
                    s += m[j * 2 + l] * inv[l * 2 + k];
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((s - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        let lam = min_eigenvalue(&m, 2);
        assert!((lam - (1.5 - (0.25f64 + 0.5).sqrt())).abs() < 1e-14);
        let diag = [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)];
        assert_eq!(min_eigenvalue(&diag, 2), 0.5);
        assert!((trace_product(&m, &inv, 2) - 2.0).abs() < 1e-14);
        assert!((quadratic_form(&diag, &[c(1.0, 1.0), c(0.0, 2.0)], 2) - (4.0 + 2.0)).abs() < 1e-14);
    }
}
