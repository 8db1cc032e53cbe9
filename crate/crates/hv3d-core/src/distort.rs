//! Deterministic synthetic degradations: seeded Gaussian noise, Gaussian
//! blur, DCT-domain quantization as a codec-free compression surrogate,
//! and depth-only noise.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cyclopean::JPEG_LUMA_QUANT;
use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{filter_clamped, gaussian_kernel};
use crate::transform::DctBasis;
use crate::video_io::{DepthMap, Frame, Plane, StereoSequence};

const QUANT_BLOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    /// Additive Gaussian noise on every plane of views and depths.
    GaussianNoise,
    /// Separable Gaussian blur on every plane.
    GaussianBlur,
    /// Quantizes 8x8 block DCT coefficients by a level-scaled JPEG table.
    DctQuantize,
    /// Additive Gaussian noise on the depth maps only.
    DepthNoise,
}

impl DistortionKind {
    pub fn name(self) -> &'static str {
        match self {
            DistortionKind::GaussianNoise => "gaussian_noise",
            DistortionKind::GaussianBlur => "gaussian_blur",
            DistortionKind::DctQuantize => "dct_quantize",
            DistortionKind::DepthNoise => "depth_noise",
        }
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_noise" => Ok(DistortionKind::GaussianNoise),
            "gaussian_blur" => Ok(DistortionKind::GaussianBlur),
            "dct_quantize" => Ok(DistortionKind::DctQuantize),
            "depth_noise" => Ok(DistortionKind::DepthNoise),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// A reproducible degradation: kind, strength, and RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    /// Noise sigma, blur sigma, or quantization-table scale.
    pub level: f64,
    pub seed: u64,
}

impl DistortionSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.level.is_finite() || self.level <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "distortion level must be finite and > 0, got {}",
                self.level
            )));
        }
        Ok(())
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Every (stream, frame, plane) triple gets its own RNG stream so frame
/// order and worker count cannot change the output.
fn derive_seed(seed: u64, stream: u64, frame: u64, plane: u64) -> u64 {
    let mut s = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    s = splitmix64(s ^ stream);
    s = splitmix64(s ^ frame);
    splitmix64(s ^ plane)
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn noisy_plane(p: &Plane, sigma: f64, seed: u64) -> Plane {
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = p
        .data
        .iter()
        .map(|&v| clamp_u8(f64::from(v) + normal.sample(&mut rng)))
        .collect();
    Plane::new(data, p.width, p.height).expect("geometry preserved")
}

fn blurred_plane(p: &Plane, sigma: f64) -> Plane {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let taps = gaussian_kernel(2 * radius + 1, sigma);
    let out = filter_clamped(&p.to_f64(), p.width, p.height, &taps);
    let data = out.into_iter().map(clamp_u8).collect();
    Plane::new(data, p.width, p.height).expect("geometry preserved")
}

/// Rounds each 8x8 DCT coefficient to the nearest multiple of the JPEG
/// luma table entry scaled by `level`. Partial tiles at the right/bottom
/// edge pass through unchanged.
fn quantized_plane(p: &Plane, level: f64) -> Plane {
    let basis = DctBasis::dct8();
    let mut data = p.data.clone();
    let mut block = vec![0.0f64; QUANT_BLOCK * QUANT_BLOCK];
    for by in 0..p.height / QUANT_BLOCK {
        for bx in 0..p.width / QUANT_BLOCK {
            for r in 0..QUANT_BLOCK {
                for c in 0..QUANT_BLOCK {
                    let v = p.data[(by * QUANT_BLOCK + r) * p.width + bx * QUANT_BLOCK + c];
                    block[r * QUANT_BLOCK + c] = f64::from(v) - 128.0;
                }
            }
            let mut coeffs = basis.dct2(&block);
            for r in 0..QUANT_BLOCK {
                for c in 0..QUANT_BLOCK {
                    let step = JPEG_LUMA_QUANT[r][c] * level;
                    let q = &mut coeffs[r * QUANT_BLOCK + c];
                    *q = (*q / step).round() * step;
                }
            }
            let rec = basis.idct2(&coeffs);
            for r in 0..QUANT_BLOCK {
                for c in 0..QUANT_BLOCK {
                    data[(by * QUANT_BLOCK + r) * p.width + bx * QUANT_BLOCK + c] =
                        clamp_u8(rec[r * QUANT_BLOCK + c] + 128.0);
                }
            }
        }
    }
    Plane::new(data, p.width, p.height).expect("geometry preserved")
}

fn distort_plane(p: &Plane, spec: &DistortionSpec, stream: u64, frame: u64, plane: u64) -> Plane {
    match spec.kind {
        DistortionKind::GaussianNoise => {
            noisy_plane(p, spec.level, derive_seed(spec.seed, stream, frame, plane))
        }
        DistortionKind::GaussianBlur => blurred_plane(p, spec.level),
        DistortionKind::DctQuantize => quantized_plane(p, spec.level),
        DistortionKind::DepthNoise => unreachable!("view planes never see depth_noise"),
    }
}

fn distort_frame(f: &Frame, spec: &DistortionSpec, stream: u64, frame: u64) -> Result<Frame> {
    if spec.kind == DistortionKind::DepthNoise {
        return Ok(f.clone());
    }
    Frame::new(
        distort_plane(&f.y, spec, stream, frame, 0),
        distort_plane(&f.u, spec, stream, frame, 1),
        distort_plane(&f.v, spec, stream, frame, 2),
    )
}

fn distort_depth(d: &DepthMap, spec: &DistortionSpec, stream: u64, frame: u64) -> Result<DepthMap> {
    let plane = match spec.kind {
        DistortionKind::GaussianNoise | DistortionKind::DepthNoise => noisy_plane(
            &d.d,
            spec.level,
            derive_seed(spec.seed, stream, frame, 0),
        ),
        DistortionKind::GaussianBlur => blurred_plane(&d.d, spec.level),
        DistortionKind::DctQuantize => quantized_plane(&d.d, spec.level),
    };
    DepthMap::new(plane)
}

/// Applies one degradation to every frame, in parallel across frames when
/// the crate is built with the parallel feature.
pub fn apply_distortion(seq: &StereoSequence, spec: &DistortionSpec) -> Result<StereoSequence> {
    spec.validate()?;
    let n = seq.frame_count;
    let left = exec::try_map_indexed(n, |i| distort_frame(&seq.left[i], spec, 0, i as u64))?;
    let right = exec::try_map_indexed(n, |i| distort_frame(&seq.right[i], spec, 1, i as u64))?;
    let depth_left =
        exec::try_map_indexed(n, |i| distort_depth(&seq.depth_left[i], spec, 2, i as u64))?;
    let depth_right =
        exec::try_map_indexed(n, |i| distort_depth(&seq.depth_right[i], spec, 3, i as u64))?;
    StereoSequence::new(left, right, depth_left, depth_right)
}
