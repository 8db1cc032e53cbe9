//! Binocular fusion model: block matching between the views, 3D-DCT fusion
//! of matched 16x16 block pairs, contrast-sensitivity masking of the fused
//! coefficients, and the resulting cyclopean quality term.

use crate::depth_quality::depth_fidelity;
use crate::error::{Error, Result};
use crate::metrics_2d::{ssim_core, SsimParams, VifParams};
use crate::score::WeightVector;
use crate::transform::DctBasis;
use crate::video_io::{tile_plane, Frame, Plane, StereoView};

pub const FUSION_BLOCK: usize = 16;

/// Standard JPEG luminance quantization table (quality 50 baseline).
pub const JPEG_LUMA_QUANT: [[f64; 8]; 8] = [
    [16.0, 11.0, 10.0, 16.0, 24.0, 40.0, 51.0, 61.0],
    [12.0, 12.0, 14.0, 19.0, 26.0, 58.0, 60.0, 55.0],
    [14.0, 13.0, 16.0, 24.0, 40.0, 57.0, 69.0, 56.0],
    [14.0, 17.0, 22.0, 29.0, 51.0, 87.0, 80.0, 62.0],
    [18.0, 22.0, 37.0, 56.0, 68.0, 109.0, 103.0, 77.0],
    [24.0, 35.0, 55.0, 64.0, 81.0, 104.0, 113.0, 92.0],
    [49.0, 64.0, 78.0, 87.0, 103.0, 121.0, 120.0, 101.0],
    [72.0, 92.0, 95.0, 98.0, 112.0, 100.0, 103.0, 99.0],
];

/// Per-block integer horizontal disparities from left-anchored SAD search.
#[derive(Debug, Clone)]
pub struct DisparityField {
    pub block_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub d: Vec<i32>,
    pub cost: Vec<u32>,
}

/// 16x16 frequency-weighting mask with entries in (0, 1], peak exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CsfMask {
    pub c: Vec<f64>,
}

/// Masked low-frequency plane of one fused block pair.
#[derive(Debug, Clone)]
pub struct CyclopeanBlock {
    pub xc: Vec<f64>,
}

/// Fusion stage knobs: disparity search radius plus the kernel parameters
/// of the embedded SSIM and depth-VIF terms.
#[derive(Debug, Clone, Copy)]
pub struct CyclopeanParams {
    pub search_range: usize,
    pub ssim: SsimParams,
    pub vif: VifParams,
}

impl Default for CyclopeanParams {
    fn default() -> Self {
        CyclopeanParams {
            search_range: 64,
            ssim: SsimParams::default(),
            vif: VifParams::default(),
        }
    }
}

/// For every 16x16 block of the left luma plane, finds the integer
/// horizontal shift into the right plane minimizing SAD. Candidates whose
/// window leaves the plane are excluded; ties prefer the smallest |d|,
/// then the negative shift.
pub fn match_blocks(left_y: &Plane, right_y: &Plane, search_range: usize) -> Result<DisparityField> {
    if !left_y.same_geometry(right_y) {
        return Err(Error::DimensionMismatch {
            left: format!("{}x{}", left_y.width, left_y.height),
            right: format!("{}x{}", right_y.width, right_y.height),
        });
    }
    let grid = tile_plane(left_y, FUSION_BLOCK)?;
    let w = left_y.width;
    let r = search_range as i64;

    let mut d_out = Vec::with_capacity(grid.len());
    let mut cost_out = Vec::with_capacity(grid.len());
    for by in 0..grid.rows {
        for bx in 0..grid.cols {
            let x0 = (bx * FUSION_BLOCK) as i64;
            let y0 = by * FUSION_BLOCK;
            let mut best: Option<(u32, i64)> = None;
            for d in -r..=r {
                let xs = x0 + d;
                if xs < 0 || xs + FUSION_BLOCK as i64 > w as i64 {
                    continue;
                }
                let mut sad = 0u32;
                for dy in 0..FUSION_BLOCK {
                    let lrow = (y0 + dy) * w + x0 as usize;
                    let rrow = (y0 + dy) * w + xs as usize;
                    for dx in 0..FUSION_BLOCK {
                        let a = left_y.data[lrow + dx] as i32;
                        let b = right_y.data[rrow + dx] as i32;
                        sad += a.abs_diff(b);
                    }
                }
                let better = match best {
                    None => true,
                    Some((bs, bd)) => {
                        (sad, d.abs(), i64::from(d >= 0)) < (bs, bd.abs(), i64::from(bd >= 0))
                    }
                };
                if better {
                    best = Some((sad, d));
                }
            }
            let (sad, d) = best.expect("d = 0 is always a valid candidate");
            d_out.push(d as i32);
            cost_out.push(sad);
        }
    }
    Ok(DisparityField {
        block_size: FUSION_BLOCK,
        cols: grid.cols,
        rows: grid.rows,
        d: d_out,
        cost: cost_out,
    })
}

/// Both planes of the 3D-DCT over a 16x16x2 block stack, in view-frequency
/// order: index 0 (sum channel, kept) and index 1 (difference, discarded).
pub fn fuse_blocks_levels(block_l: &[f64], block_r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = FUSION_BLOCK * FUSION_BLOCK;
    assert_eq!(block_l.len(), n, "left block must be 16x16");
    assert_eq!(block_r.len(), n, "right block must be 16x16");
    let basis = DctBasis::dct16();
    let cl = basis.dct2(block_l);
    let cr = basis.dct2(block_r);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let level0 = cl.iter().zip(&cr).map(|(a, b)| (a + b) * s).collect();
    let level1 = cl.iter().zip(&cr).map(|(a, b)| (a - b) * s).collect();
    (level0, level1)
}

/// Low-frequency (index-0) plane of the two-block 3D-DCT; the depth
/// dimension is a 2-point orthonormal DCT, so this is the scaled sum
/// channel of the two per-view 2D transforms.
pub fn fuse_blocks_3d_dct(block_l: &[f64], block_r: &[f64]) -> Vec<f64> {
    fuse_blocks_levels(block_l, block_r).0
}

/// Frequency-sensitivity mask from the JPEG luminance quantization table:
/// the 8x8 table is bilinearly upsampled to 16x16 (corners aligned) and
/// inverted so the most visible frequency has weight exactly 1.
pub fn build_csf_mask() -> CsfMask {
    let mut up = vec![0.0f64; FUSION_BLOCK * FUSION_BLOCK];
    let scale = 7.0 / 15.0;
    for i in 0..FUSION_BLOCK {
        let sy = i as f64 * scale;
        let y0 = sy.floor() as usize;
        let fy = sy - y0 as f64;
        let y1 = (y0 + 1).min(7);
        for j in 0..FUSION_BLOCK {
            let sx = j as f64 * scale;
            let x0 = sx.floor() as usize;
            let fx = sx - x0 as f64;
            let x1 = (x0 + 1).min(7);
            up[i * FUSION_BLOCK + j] = JPEG_LUMA_QUANT[y0][x0] * (1.0 - fy) * (1.0 - fx)
                + JPEG_LUMA_QUANT[y0][x1] * (1.0 - fy) * fx
                + JPEG_LUMA_QUANT[y1][x0] * fy * (1.0 - fx)
                + JPEG_LUMA_QUANT[y1][x1] * fy * fx;
        }
    }
    let min = up.iter().cloned().fold(f64::INFINITY, f64::min);
    CsfMask {
        c: up.iter().map(|&q| min / q).collect(),
    }
}

/// Element-wise masking of a fused coefficient block.
pub fn apply_csf(coeffs: &[f64], mask: &CsfMask) -> CyclopeanBlock {
    assert_eq!(coeffs.len(), mask.c.len(), "coefficient block must be 16x16");
    CyclopeanBlock {
        xc: coeffs.iter().zip(&mask.c).map(|(x, c)| x * c).collect(),
    }
}

fn block_f64(plane: &Plane, x0: usize, y0: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(FUSION_BLOCK * FUSION_BLOCK);
    for dy in 0..FUSION_BLOCK {
        let row = (y0 + dy) * plane.width + x0;
        out.extend(plane.data[row..row + FUSION_BLOCK].iter().map(|&v| v as f64));
    }
    out
}

/// Mean SSIM between the reconstructed cyclopean blocks of the reference
/// and distorted pairs. Block correspondence comes from the reference
/// pair's disparity field so both pipelines compare the same pixels.
pub fn fused_similarity(
    ref_left: &Frame,
    ref_right: &Frame,
    dist_left: &Frame,
    dist_right: &Frame,
    params: &CyclopeanParams,
) -> Result<f64> {
    if !ref_left.same_geometry(dist_left) || !ref_right.same_geometry(dist_right) {
        return Err(Error::DimensionMismatch {
            left: format!("reference {}x{}", ref_left.width, ref_left.height),
            right: format!("distorted {}x{}", dist_left.width, dist_left.height),
        });
    }
    let field = match_blocks(&ref_left.y, &ref_right.y, params.search_range)?;
    let mask = build_csf_mask();
    let basis = DctBasis::dct16();

    let mut sum = 0.0;
    for by in 0..field.rows {
        for bx in 0..field.cols {
            let i = by * field.cols + bx;
            let x0 = bx * FUSION_BLOCK;
            let y0 = by * FUSION_BLOCK;
            let xs = (x0 as i64 + field.d[i] as i64) as usize;

            let fused_ref = apply_csf(
                &fuse_blocks_3d_dct(
                    &block_f64(&ref_left.y, x0, y0),
                    &block_f64(&ref_right.y, xs, y0),
                ),
                &mask,
            );
            let fused_dist = apply_csf(
                &fuse_blocks_3d_dct(
                    &block_f64(&dist_left.y, x0, y0),
                    &block_f64(&dist_right.y, xs, y0),
                ),
                &mask,
            );
            let rec_ref = basis.idct2(&fused_ref.xc);
            let rec_dist = basis.idct2(&fused_dist.xc);
            sum += ssim_core(&rec_ref, &rec_dist, FUSION_BLOCK, FUSION_BLOCK, &params.ssim).0;
        }
    }
    // Mean block SSIM lives in [-1, 1]; the quality term floors at zero.
    Ok((sum / field.d.len() as f64).clamp(0.0, 1.0))
}

/// Composition of the two factors of the cyclopean term.
pub(crate) fn q_cyclopean_from_parts(depth_fid: f64, beta: f64, block_ssim_mean: f64) -> f64 {
    depth_fid.clamp(0.0, 1.0).powf(beta) * block_ssim_mean.clamp(0.0, 1.0)
}

/// Cyclopean quality of one distorted stereo frame against its reference:
/// depth fidelity raised to beta, times the mean SSIM of the reconstructed
/// masked fusion blocks. 1 on identity, 0 when either factor collapses.
pub fn q_cyclopean(
    reference: StereoView<'_>,
    distorted: StereoView<'_>,
    weights: &WeightVector,
    params: &CyclopeanParams,
) -> Result<f64> {
    let depth_fid = depth_fidelity(&reference, &distorted, &params.vif)?;
    let blocks = fused_similarity(
        reference.left,
        reference.right,
        distorted.left,
        distorted.right,
        params,
    )?;
    Ok(q_cyclopean_from_parts(depth_fid, weights.beta, blocks))
}
