//! Procedural stereo test content: band-limited textured views, smooth
//! chroma fields, and smooth depth maps with a controllable global
//! disparity between the views. Deterministic in the seed, so fixtures and
//! benchmarks can be regenerated bit-exactly anywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exec;
use crate::video_io::{DepthMap, Frame, Plane, StereoSequence};

/// Shape and texture controls for one generated sequence.
#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    /// Dominant spatial wavelength of the luma texture, in pixels.
    pub texture_period: f64,
    /// Texture amplitude relative to the usable luma range; 1.0 spans it.
    pub contrast: f64,
    /// Global horizontal shift of the right view, in pixels.
    pub disparity: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            width: 320,
            height: 192,
            frames: 8,
            seed: 7,
            texture_period: 24.0,
            contrast: 0.8,
            disparity: 12,
        }
    }
}

/// Splitmix-style integer hash folded to [-1, 1); gives shift-consistent
/// speckle without RNG sequencing constraints.
fn hash_noise(seed: u64, a: i64, b: i64, c: i64, channel: u64) -> f64 {
    let mut z = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((a as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add((b as u64).wrapping_mul(0x94d0_49bb_1331_11eb))
        .wrapping_add((c as u64).wrapping_mul(0xd6e8_feb8_6659_fd93))
        .wrapping_add(channel.wrapping_mul(0xa0761d6478bd642f));
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

#[derive(Debug, Clone, Copy)]
struct Gratings {
    lambda: [f64; 6],
    phase: [f64; 6],
    drift: [f64; 3],
}

fn draw_gratings(p: &SynthParams) -> Gratings {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut lambda = [0.0; 6];
    let mut phase = [0.0; 6];
    for i in 0..6 {
        lambda[i] = p.texture_period * rng.random_range(0.6..1.7);
        phase[i] = rng.random_range(0.0..std::f64::consts::TAU);
    }
    let drift = [
        rng.random_range(0.05..0.25),
        rng.random_range(0.05..0.25),
        rng.random_range(0.02..0.12),
    ];
    Gratings { lambda, phase, drift }
}

fn luma_at(p: &SynthParams, g: &Gratings, xi: i64, yi: i64, ti: i64) -> u8 {
    let (x, y, t) = (xi as f64, yi as f64, ti as f64);
    let tau = std::f64::consts::TAU;
    let amp = 55.0 * p.contrast;
    let v = 120.0
        + amp * (tau * x / g.lambda[0] + g.phase[0] + g.drift[0] * t).sin()
            * (tau * y / g.lambda[1] + g.phase[1]).cos()
        + 0.6 * amp * (tau * (x + y) / g.lambda[2] + g.phase[2] + g.drift[1] * t).sin()
        + 18.0 * x / p.width as f64
        + 6.0 * hash_noise(p.seed, xi, yi, ti, 1);
    v.round().clamp(0.0, 255.0) as u8
}

fn chroma_at(g: &Gratings, offset: f64, x: f64, y: f64, t: f64, channel: usize) -> u8 {
    let tau = std::f64::consts::TAU;
    let lam = g.lambda[3 + channel] * 2.0;
    let sign = if channel == 0 { 1.0 } else { -1.0 };
    let v = 128.0
        + sign * 26.0 * (tau * (x + offset) / lam + g.phase[3 + channel] + g.drift[2] * t).sin()
            * (tau * y / (lam * 1.3) + g.phase[5]).cos();
    v.round().clamp(0.0, 255.0) as u8
}

fn depth_at(p: &SynthParams, g: &Gratings, xi: i64, yi: i64, ti: i64) -> u8 {
    let (x, y, t) = (xi as f64, yi as f64, ti as f64);
    let tau = std::f64::consts::TAU;
    let lam_x = (g.lambda[5] * 4.5).max(48.0);
    let lam_y = (g.lambda[4] * 3.5).max(40.0);
    let v = 128.0
        + 68.0 * (tau * x / lam_x + g.phase[4] + g.drift[2] * t).sin()
            * (tau * y / lam_y + g.phase[1]).cos()
        + 24.0 * (tau * (x - y) / (lam_x * 1.9) + g.phase[0]).sin()
        + 2.5 * hash_noise(p.seed, xi, yi, ti, 2);
    v.round().clamp(0.0, 255.0) as u8
}

/// Generates a full four-stream sequence. The right view and right depth
/// sample the same continuous fields shifted by `disparity`, so interior
/// blocks of the two views are exact translates of each other.
pub fn synthesize_sequence(p: &SynthParams) -> Result<StereoSequence> {
    let g = draw_gratings(p);
    let (w, h) = (p.width, p.height);
    let frames: Vec<(Frame, Frame, DepthMap, DepthMap)> =
        exec::try_map_indexed(p.frames, |ti| {
            let t = ti as f64;
            let mut views = Vec::with_capacity(2);
            for shift in [0usize, p.disparity] {
                let mut yp = vec![0u8; w * h];
                let mut dp = vec![0u8; w * h];
                for yy in 0..h {
                    for xx in 0..w {
                        let xi = xx as i64 - shift as i64;
                        yp[yy * w + xx] = luma_at(p, &g, xi, yy as i64, ti as i64);
                        dp[yy * w + xx] = depth_at(p, &g, xi, yy as i64, ti as i64);
                    }
                }
                let (cw, ch) = (w / 2, h / 2);
                let mut up = vec![0u8; cw * ch];
                let mut vp = vec![0u8; cw * ch];
                for yy in 0..ch {
                    for xx in 0..cw {
                        let xs = xx as f64 - shift as f64 / 2.0;
                        up[yy * cw + xx] = chroma_at(&g, 0.0, xs, yy as f64, t, 0);
                        vp[yy * cw + xx] = chroma_at(&g, 11.0, xs, yy as f64, t, 1);
                    }
                }
                let frame = Frame::new(
                    Plane::new(yp, w, h)?,
                    Plane::new(up, cw, ch)?,
                    Plane::new(vp, cw, ch)?,
                )?;
                let depth = DepthMap::new(Plane::new(dp, w, h)?)?;
                views.push((frame, depth));
            }
            let (right_f, right_d) = views.pop().expect("two views generated");
            let (left_f, left_d) = views.pop().expect("two views generated");
            Ok::<_, crate::error::Error>((left_f, right_f, left_d, right_d))
        })?;

    let mut left = Vec::with_capacity(p.frames);
    let mut right = Vec::with_capacity(p.frames);
    let mut depth_left = Vec::with_capacity(p.frames);
    let mut depth_right = Vec::with_capacity(p.frames);
    for (fl, fr, dl, dr) in frames {
        left.push(fl);
        right.push(fr);
        depth_left.push(dl);
        depth_right.push(dr);
    }
    StereoSequence::new(left, right, depth_left, depth_right)
}
