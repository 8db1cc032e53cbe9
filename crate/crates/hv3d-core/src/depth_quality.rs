//! Depth-information quality: fidelity of the distorted depth maps weighted
//! by how much local depth variation the reference scene actually has,
//! measured over 64x64 tiles.

use crate::error::{Error, Result};
use crate::metrics_2d::{vif, VifParams};
use crate::video_io::{tile_plane, DepthMap, StereoView};

pub const DEPTH_BLOCK: usize = 64;

/// Per-tile population variances of a reference depth map.
#[derive(Debug, Clone)]
pub struct VarianceWeights {
    pub sigma2: Vec<f64>,
    pub n_blocks: usize,
}

/// Depth term knobs: the fidelity exponent and the kernel parameters of
/// the embedded VIF.
#[derive(Debug, Clone, Copy)]
pub struct DepthParams {
    pub beta: f64,
    pub vif: VifParams,
}

impl Default for DepthParams {
    fn default() -> Self {
        DepthParams {
            beta: 0.7,
            vif: VifParams::default(),
        }
    }
}

/// Population variance of each 64x64 tile of the reference depth map,
/// row-major, partial border tiles dropped.
pub fn local_variance_weights(depth_ref: &DepthMap) -> Result<VarianceWeights> {
    let grid = tile_plane(&depth_ref.d, DEPTH_BLOCK)?;
    let sigma2 = grid
        .blocks
        .iter()
        .map(|tile| {
            let n = tile.len() as f64;
            let mean = tile.iter().map(|&v| v as f64).sum::<f64>() / n;
            tile.iter()
                .map(|&v| {
                    let d = v as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / n
        })
        .collect::<Vec<f64>>();
    Ok(VarianceWeights {
        n_blocks: sigma2.len(),
        sigma2,
    })
}

/// Normalized variance mass: the per-tile variances summed and divided by
/// the count times the largest variance, so the factor is 1 when variation
/// is spread evenly and small when one tile dominates. A perfectly flat
/// reference carries no variation to weight and the factor is defined as 1.
pub fn weighting_factor(weights: &VarianceWeights) -> f64 {
    let max = weights.sigma2.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 1.0;
    }
    weights.sigma2.iter().sum::<f64>() / (weights.n_blocks as f64 * max)
}

/// Mean clamped VIF over the two per-view depth pairs: the depth-stream
/// fidelity shared by the cyclopean and depth terms.
pub fn depth_fidelity(
    reference: &StereoView<'_>,
    distorted: &StereoView<'_>,
    params: &VifParams,
) -> Result<f64> {
    let left = vif(&reference.depth_left.d, &distorted.depth_left.d, params)?;
    let right = vif(&reference.depth_right.d, &distorted.depth_right.d, params)?;
    Ok((left.clamp(0.0, 1.0) + right.clamp(0.0, 1.0)) / 2.0)
}

/// Depth quality of one distorted depth map against its reference:
/// clamped VIF raised to beta, times the reference variance weighting
/// factor. Equals the weighting factor exactly on identity.
pub fn q_depth(depth_ref: &DepthMap, depth_dist: &DepthMap, params: &DepthParams) -> Result<f64> {
    if depth_ref.width != depth_dist.width || depth_ref.height != depth_dist.height {
        return Err(Error::DimensionMismatch {
            left: format!("{}x{}", depth_ref.width, depth_ref.height),
            right: format!("{}x{}", depth_dist.width, depth_dist.height),
        });
    }
    let fidelity = vif(&depth_ref.d, &depth_dist.d, &params.vif)?.clamp(0.0, 1.0);
    let factor = weighting_factor(&local_variance_weights(depth_ref)?);
    Ok(fidelity.powf(params.beta) * factor)
}
