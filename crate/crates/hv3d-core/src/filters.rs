//! Separable filtering and resampling primitives shared by the metric
//! kernels. Everything operates on row-major f64 buffers.

/// Normalized 1-D Gaussian tap vector of odd length `n` with the given
/// sigma, sampled at integer offsets from the center.
pub fn gaussian_kernel(n: usize, sigma: f64) -> Vec<f64> {
    assert!(n % 2 == 1, "kernel length must be odd");
    assert!(sigma > 0.0, "sigma must be positive");
    let half = (n / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Valid-mode separable filtering: applies `taps` along rows then columns,
/// keeping only positions where the kernel lies fully inside the image.
/// Output is `(w - n + 1) x (h - n + 1)`.
pub fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = taps.len();
    debug_assert!(w >= n && h >= n);
    let ow = w - n + 1;
    let oh = h - n + 1;

    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src_row = &src[y * w..(y + 1) * w];
        let dst_row = &mut rows[y * ow..(y + 1) * ow];
        for (x, out) in dst_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * src_row[x + k];
            }
            *out = acc;
        }
    }

    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for k in 0..n {
            let t = taps[k];
            let src_row = &rows[(y + k) * ow..(y + k + 1) * ow];
            let dst_row = &mut out[y * ow..(y + 1) * ow];
            for x in 0..ow {
                dst_row[x] += t * src_row[x];
            }
        }
    }
    (out, ow, oh)
}

/// Same-size separable filtering with edge-clamped borders (samples outside
/// the image repeat the nearest edge pixel).
pub fn filter_clamped(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len() as isize;
    let half = n / 2;

    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        let src_row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for k in 0..n {
                let sx = (x as isize + k - half).clamp(0, w as isize - 1) as usize;
                acc += taps[k as usize] * src_row[sx];
            }
            rows[y * w + x] = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for k in 0..n {
                let sy = (y as isize + k - half).clamp(0, h as isize - 1) as usize;
                acc += taps[k as usize] * rows[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Keeps every other sample starting at (0,0); output dimensions round up,
/// so odd inputs keep their final row/column.
pub fn decimate2(src: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let ow = w.div_ceil(2);
    let oh = h.div_ceil(2);
    let mut out = Vec::with_capacity(ow * oh);
    for y in (0..h).step_by(2) {
        for x in (0..w).step_by(2) {
            out.push(src[y * w + x]);
        }
    }
    (out, ow, oh)
}

/// 2x2 block-mean downsampling with edge clamp; output dimensions are
/// `floor(w/2) x floor(h/2)` when even, rounding handled by clamping the
/// lower-right neighbors for odd sizes.
pub fn downsample2_mean(src: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let ow = (w / 2).max(1);
    let oh = (h / 2).max(1);
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let x0 = 2 * x;
            let y0 = 2 * y;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            out.push(
                0.25 * (src[y0 * w + x0] + src[y0 * w + x1] + src[y1 * w + x0] + src[y1 * w + x1]),
            );
        }
    }
    (out, ow, oh)
}
