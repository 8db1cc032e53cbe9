//! Full-reference plane metrics: PSNR, SSIM, MS-SSIM, and pixel-domain VIF.
//!
//! SSIM and VIF feed the stereo score; all four double as the reported
//! per-view baseline columns.

use crate::error::{Error, Result};
use crate::filters::{decimate2, downsample2_mean, filter_valid, gaussian_kernel};
use crate::video_io::Plane;

/// SSIM stabilizers and local window shape.
#[derive(Debug, Clone, Copy)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window_len: usize,
    pub window_sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            window_len: 11,
            window_sigma: 1.5,
        }
    }
}

/// VIF pyramid depth and visual-noise model.
#[derive(Debug, Clone, Copy)]
pub struct VifParams {
    pub scales: usize,
    pub noise_variance: f64,
    pub epsilon: f64,
}

impl Default for VifParams {
    fn default() -> Self {
        VifParams {
            scales: 4,
            noise_variance: 2.0,
            epsilon: 1e-10,
        }
    }
}

/// MS-SSIM per-scale exponents (5 dyadic scales).
pub const MS_SSIM_EXPONENTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

/// Smallest plane side accepted by [`vif`] with the default 4-scale pyramid:
/// every scale must keep at least one valid window position.
pub const VIF_MIN_SIDE: usize = 41;

/// Smallest plane side accepted by [`ms_ssim`]: the coarsest of the five
/// dyadic scales must still hold one 11x11 window.
pub const MS_SSIM_MIN_SIDE: usize = 176;

fn check_dims(a: &Plane, b: &Plane) -> Result<()> {
    if !a.same_geometry(b) {
        return Err(Error::DimensionMismatch {
            left: format!("{}x{}", a.width, a.height),
            right: format!("{}x{}", b.width, b.height),
        });
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over 8-bit samples; identical planes
/// produce the infinite marker.
pub fn psnr(reference: &Plane, distorted: &Plane) -> Result<f64> {
    check_dims(reference, distorted)?;
    let mut sse = 0.0f64;
    for (&a, &b) in reference.data.iter().zip(&distorted.data) {
        let d = a as f64 - b as f64;
        sse += d * d;
    }
    let mse = sse / reference.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Mean and mean-contrast SSIM statistics over all valid window positions.
/// Returns `(mean ssim, mean contrast-structure term)`.
pub(crate) fn ssim_core(
    a: &[f64],
    b: &[f64],
    w: usize,
    h: usize,
    params: &SsimParams,
) -> (f64, f64) {
    let taps = gaussian_kernel(params.window_len, params.window_sigma);
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);

    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();

    let (mu1, ow, oh) = filter_valid(a, w, h, &taps);
    let (mu2, _, _) = filter_valid(b, w, h, &taps);
    let (m_aa, _, _) = filter_valid(&aa, w, h, &taps);
    let (m_bb, _, _) = filter_valid(&bb, w, h, &taps);
    let (m_ab, _, _) = filter_valid(&ab, w, h, &taps);

    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    for i in 0..ow * oh {
        let mu1_sq = mu1[i] * mu1[i];
        let mu2_sq = mu2[i] * mu2[i];
        let mu1_mu2 = mu1[i] * mu2[i];
        let sigma1_sq = m_aa[i] - mu1_sq;
        let sigma2_sq = m_bb[i] - mu2_sq;
        let sigma12 = m_ab[i] - mu1_mu2;
        let cs = (2.0 * sigma12 + c2) / (sigma1_sq + sigma2_sq + c2);
        let luminance = (2.0 * mu1_mu2 + c1) / (mu1_sq + mu2_sq + c1);
        ssim_sum += luminance * cs;
        cs_sum += cs;
    }
    let n = (ow * oh) as f64;
    (ssim_sum / n, cs_sum / n)
}

/// Structural similarity with an 11x11 Gaussian window, averaged over all
/// valid window positions. Exactly 1 on identical planes.
pub fn ssim(reference: &Plane, distorted: &Plane, params: &SsimParams) -> Result<f64> {
    check_dims(reference, distorted)?;
    if reference.width < params.window_len || reference.height < params.window_len {
        return Err(Error::PlaneTooSmall {
            width: reference.width,
            height: reference.height,
            needed: params.window_len,
        });
    }
    let a = reference.to_f64();
    let b = distorted.to_f64();
    Ok(ssim_core(&a, &b, reference.width, reference.height, params).0)
}

/// Five-scale SSIM: contrast-structure means of the four finer scales and
/// the full SSIM mean of the coarsest, combined with the standard exponents.
pub fn ms_ssim(reference: &Plane, distorted: &Plane, params: &SsimParams) -> Result<f64> {
    check_dims(reference, distorted)?;
    if reference.width < MS_SSIM_MIN_SIDE || reference.height < MS_SSIM_MIN_SIDE {
        return Err(Error::PlaneTooSmall {
            width: reference.width,
            height: reference.height,
            needed: MS_SSIM_MIN_SIDE,
        });
    }
    let mut a = reference.to_f64();
    let mut b = distorted.to_f64();
    let (mut w, mut h) = (reference.width, reference.height);

    let mut score = 1.0f64;
    let last = MS_SSIM_EXPONENTS.len() - 1;
    for (scale, &exponent) in MS_SSIM_EXPONENTS.iter().enumerate() {
        let (mean_ssim, mean_cs) = ssim_core(&a, &b, w, h, params);
        // A wholly inverted scale carries no usable structure; floor at zero
        // so the exponentiated product stays defined.
        let term = if scale == last { mean_ssim } else { mean_cs }.max(0.0);
        score *= term.powf(exponent);
        if scale != last {
            let (da, dw, dh) = downsample2_mean(&a, w, h);
            let (db, _, _) = downsample2_mean(&b, w, h);
            a = da;
            b = db;
            w = dw;
            h = dh;
        }
    }
    Ok(score)
}

/// Pixel-domain VIF core over f64 rasters. See [`vif`] for semantics.
pub(crate) fn vif_core(a: &[f64], b: &[f64], w: usize, h: usize, params: &VifParams) -> f64 {
    if a == b {
        // Identical signals carry identical information at every scale.
        return 1.0;
    }
    let eps = params.epsilon;
    let sigma_n = params.noise_variance;

    let mut ref_img = a.to_vec();
    let mut dist_img = b.to_vec();
    let (mut cw, mut ch) = (w, h);
    let mut num = 0.0f64;
    let mut den = 0.0f64;

    for scale in 1..=params.scales {
        let n = (1usize << (params.scales - scale + 1)) + 1;
        let taps = gaussian_kernel(n, n as f64 / 5.0);

        if scale > 1 {
            let (rf, fw, fh) = filter_valid(&ref_img, cw, ch, &taps);
            let (df, _, _) = filter_valid(&dist_img, cw, ch, &taps);
            let (rd, dw, dh) = decimate2(&rf, fw, fh);
            let (dd, _, _) = decimate2(&df, fw, fh);
            ref_img = rd;
            dist_img = dd;
            cw = dw;
            ch = dh;
        }

        let rr: Vec<f64> = ref_img.iter().map(|v| v * v).collect();
        let dd: Vec<f64> = dist_img.iter().map(|v| v * v).collect();
        let rd: Vec<f64> = ref_img.iter().zip(&dist_img).map(|(x, y)| x * y).collect();

        let (mu1, ow, oh) = filter_valid(&ref_img, cw, ch, &taps);
        let (mu2, _, _) = filter_valid(&dist_img, cw, ch, &taps);
        let (m_rr, _, _) = filter_valid(&rr, cw, ch, &taps);
        let (m_dd, _, _) = filter_valid(&dd, cw, ch, &taps);
        let (m_rd, _, _) = filter_valid(&rd, cw, ch, &taps);

        for i in 0..ow * oh {
            let mut sigma1_sq = (m_rr[i] - mu1[i] * mu1[i]).max(0.0);
            let sigma2_sq = (m_dd[i] - mu2[i] * mu2[i]).max(0.0);
            let sigma12 = m_rd[i] - mu1[i] * mu2[i];

            let mut g = sigma12 / (sigma1_sq + eps);
            let mut sv_sq = sigma2_sq - g * sigma12;
            if sigma1_sq < eps {
                g = 0.0;
                sv_sq = sigma2_sq;
                sigma1_sq = 0.0;
            }
            if sigma2_sq < eps {
                g = 0.0;
                sv_sq = 0.0;
            }
            if g < 0.0 {
                sv_sq = sigma2_sq;
                g = 0.0;
            }
            if sv_sq <= eps {
                sv_sq = eps;
            }
            num += (1.0 + g * g * sigma1_sq / (sv_sq + sigma_n)).log10();
            den += (1.0 + sigma1_sq / sigma_n).log10();
        }
    }

    if den <= eps {
        // Zero-information reference: defined by continuity.
        return if a == b { 1.0 } else { 0.0 };
    }
    num / den
}

/// Pixel-domain visual information fidelity over a dyadic Gaussian pyramid.
/// The score is the ratio of information surviving the distortion channel
/// to the information in the reference, so identity gives exactly 1 and a
/// structureless output gives 0. Mild contrast enhancement can push the
/// ratio slightly above 1.
pub fn vif(reference: &Plane, distorted: &Plane, params: &VifParams) -> Result<f64> {
    check_dims(reference, distorted)?;
    if !vif_side_fits(reference.width, params.scales) || !vif_side_fits(reference.height, params.scales)
    {
        return Err(Error::PlaneTooSmall {
            width: reference.width,
            height: reference.height,
            needed: vif_min_side(params.scales),
        });
    }
    let a = reference.to_f64();
    let b = distorted.to_f64();
    Ok(vif_core(&a, &b, reference.width, reference.height, params))
}

/// Whether one plane side survives every filtering and decimation step of a
/// `scales`-level pyramid with at least one valid window position left.
fn vif_side_fits(side: usize, scales: usize) -> bool {
    let mut s = side;
    for scale in 1..=scales {
        let n = (1usize << (scales - scale + 1)) + 1;
        if scale > 1 {
            if s < n {
                return false;
            }
            s = (s - n + 1).div_ceil(2);
        }
        if s < n {
            return false;
        }
    }
    true
}

/// Smallest side accepted by a `scales`-level pyramid.
fn vif_min_side(scales: usize) -> usize {
    (1usize..)
        .find(|&s| vif_side_fits(s, scales))
        .expect("some side always fits")
}
