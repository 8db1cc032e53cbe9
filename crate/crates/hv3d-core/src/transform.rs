//! Orthonormal type-II DCT in two dimensions, used at 16x16 for the
//! binocular fusion stage and at 8x8 for the quantization distortion.
//!
//! The basis is C[u][n] = c(u) * cos(pi * (2n + 1) * u / (2N)) with
//! c(0) = sqrt(1/N) and c(u) = sqrt(2/N) otherwise, so `C * C^T = I` and
//! the forward/inverse pair is exactly `X = C x C^T`, `x = C^T X C`.

use std::sync::LazyLock;

/// Precomputed orthonormal DCT basis for one block size.
#[derive(Debug, Clone)]
pub struct DctBasis {
    pub size: usize,
    /// Row-major `size x size` matrix; row u holds basis vector u.
    basis: Vec<f64>,
}

static DCT8: LazyLock<DctBasis> = LazyLock::new(|| DctBasis::new(8));
static DCT16: LazyLock<DctBasis> = LazyLock::new(|| DctBasis::new(16));

impl DctBasis {
    pub fn new(size: usize) -> Self {
        assert!(size > 0);
        let n = size as f64;
        let mut basis = vec![0.0; size * size];
        for u in 0..size {
            let c = if u == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for x in 0..size {
                basis[u * size + x] =
                    c * (std::f64::consts::PI * (2.0 * x as f64 + 1.0) * u as f64 / (2.0 * n)).cos();
            }
        }
        DctBasis { size, basis }
    }

    /// Shared 8x8 basis.
    pub fn dct8() -> &'static DctBasis {
        &DCT8
    }

    /// Shared 16x16 basis.
    pub fn dct16() -> &'static DctBasis {
        &DCT16
    }

    /// Forward 2-D transform of a row-major `size x size` block.
    pub fn dct2(&self, block: &[f64]) -> Vec<f64> {
        let tmp = self.mul_basis_left(block);
        self.mul_basis_t_right(&tmp)
    }

    /// Inverse 2-D transform; `idct2(dct2(x))` reproduces `x` to within
    /// floating-point rounding.
    pub fn idct2(&self, coeffs: &[f64]) -> Vec<f64> {
        let tmp = self.mul_basis_t_left(coeffs);
        self.mul_basis_right(&tmp)
    }

    /// C * M
    fn mul_basis_left(&self, m: &[f64]) -> Vec<f64> {
        let n = self.size;
        debug_assert_eq!(m.len(), n * n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let c = self.basis[i * n + k];
                for j in 0..n {
                    out[i * n + j] += c * m[k * n + j];
                }
            }
        }
        out
    }

    /// C^T * M
    fn mul_basis_t_left(&self, m: &[f64]) -> Vec<f64> {
        let n = self.size;
        debug_assert_eq!(m.len(), n * n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let c = self.basis[k * n + i];
                for j in 0..n {
                    out[i * n + j] += c * m[k * n + j];
                }
            }
        }
        out
    }

    /// M * C^T
    fn mul_basis_t_right(&self, m: &[f64]) -> Vec<f64> {
        let n = self.size;
        debug_assert_eq!(m.len(), n * n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m[i * n + k] * self.basis[j * n + k];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    /// M * C
    fn mul_basis_right(&self, m: &[f64]) -> Vec<f64> {
        let n = self.size;
        debug_assert_eq!(m.len(), n * n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m[i * n + k] * self.basis[k * n + j];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }
}
