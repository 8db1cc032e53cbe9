//! Aggregation of the per-view, cyclopean, and depth terms into the final
//! normalized stereo quality score, plus the per-frame report with the
//! four 2D baseline metrics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cyclopean::{fused_similarity, q_cyclopean_from_parts, CyclopeanParams};
use crate::depth_quality::{local_variance_weights, weighting_factor};
use crate::error::{Error, Result};
use crate::exec;
use crate::metrics_2d::{ms_ssim, psnr, ssim, vif};
use crate::video_io::{Frame, StereoSequence, StereoView};

/// Weighting constants of the combined score and the fidelity exponent.
/// `calibrated` records whether the values came from a least-squares fit
/// against subjective scores or are the shipped placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub beta: f64,
    #[serde(default)]
    pub calibrated: bool,
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector {
            w1: 0.25,
            w2: 0.30,
            w3: 0.10,
            w4: 0.05,
            beta: 0.7,
            calibrated: false,
        }
    }
}

impl WeightVector {
    pub fn validate(&self) -> Result<()> {
        let ws = [self.w1, self.w2, self.w3, self.w4];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::DegenerateWeights);
        }
        if ws.iter().all(|&w| w == 0.0) {
            return Err(Error::DegenerateWeights);
        }
        if !self.beta.is_finite() || self.beta <= 0.0 || self.beta > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let w: WeightVector = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Weight-independent measurements of one frame pair; everything the
/// score needs, so one pass supports any number of weight vectors.
#[derive(Debug, Clone, Copy)]
pub struct FrameComponents {
    /// Raw per-plane VIF values (unclamped).
    pub vif_y_left: f64,
    pub vif_u_left: f64,
    pub vif_v_left: f64,
    pub vif_y_right: f64,
    pub vif_u_right: f64,
    pub vif_v_right: f64,
    /// Mean fused-block SSIM, clamped to [0, 1].
    pub block_ssim: f64,
    /// Per-view depth VIF, clamped to [0, 1].
    pub depth_fid_left: f64,
    pub depth_fid_right: f64,
    /// Per-view depth variance weighting factors.
    pub factor_left: f64,
    pub factor_right: f64,
    pub psnr_left: f64,
    pub psnr_right: f64,
    pub ssim_left: f64,
    pub ssim_right: f64,
    pub msssim_left: f64,
    pub msssim_right: f64,
}

/// One report row: score terms plus baseline metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub q_left: f64,
    pub q_right: f64,
    pub q_rl: f64,
    pub q_d: f64,
    pub hv3d_max: f64,
    pub hv3d: f64,
    pub psnr_l: f64,
    pub psnr_r: f64,
    pub ssim_l: f64,
    pub ssim_r: f64,
    pub msssim_l: f64,
    pub msssim_r: f64,
    pub vifp_l: f64,
    pub vifp_r: f64,
}

/// Per-frame records plus their arithmetic-mean pooling.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub frames: Vec<FrameRecord>,
    pub pooled: FrameRecord,
    pub calibrated: bool,
}

pub const REPORT_HEADER: &str = "frame,q_left,q_right,q_rl,q_d,hv3d_max,hv3d,psnr_l,psnr_r,ssim_l,ssim_r,msssim_l,msssim_r,vifp_l,vifp_r";

/// Six-decimal fixed formatting with an `inf` token for the infinite
/// PSNR marker.
pub fn format_score(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{:.6}", v)
    }
}

impl FrameRecord {
    fn fields(&self) -> [f64; 14] {
        [
            self.q_left,
            self.q_right,
            self.q_rl,
            self.q_d,
            self.hv3d_max,
            self.hv3d,
            self.psnr_l,
            self.psnr_r,
            self.ssim_l,
            self.ssim_r,
            self.msssim_l,
            self.msssim_r,
            self.vifp_l,
            self.vifp_r,
        ]
    }

    fn from_fields(f: [f64; 14]) -> Self {
        FrameRecord {
            q_left: f[0],
            q_right: f[1],
            q_rl: f[2],
            q_d: f[3],
            hv3d_max: f[4],
            hv3d: f[5],
            psnr_l: f[6],
            psnr_r: f[7],
            ssim_l: f[8],
            ssim_r: f[9],
            msssim_l: f[10],
            msssim_r: f[11],
            vifp_l: f[12],
            vifp_r: f[13],
        }
    }

    fn csv_cells(&self) -> String {
        self.fields()
            .iter()
            .map(|&v| format_score(v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl MetricReport {
    /// One row per frame (0-based index) plus a final `pooled` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for (i, r) in self.frames.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, r.csv_cells()));
        }
        out.push_str(&format!("pooled,{}\n", self.pooled.csv_cells()));
        out
    }
}

fn weighted_view(w: &WeightVector, vif_y: f64, vif_u: f64, vif_v: f64) -> f64 {
    w.w1 * vif_y.clamp(0.0, 1.0) + w.w4 * vif_u.clamp(0.0, 1.0) + w.w4 * vif_v.clamp(0.0, 1.0)
}

/// Weighted single-view quality: luma VIF weighted by w1 plus both chroma
/// VIFs weighted by w4.
pub fn view_quality(reference: &Frame, distorted: &Frame, w: &WeightVector) -> Result<f64> {
    w.validate()?;
    if !reference.same_geometry(distorted) {
        return Err(Error::DimensionMismatch {
            left: format!("{}x{}", reference.width, reference.height),
            right: format!("{}x{}", distorted.width, distorted.height),
        });
    }
    let params = crate::metrics_2d::VifParams::default();
    let vy = vif(&reference.y, &distorted.y, &params)?;
    let vu = vif(&reference.u, &distorted.u, &params)?;
    let vv = vif(&reference.v, &distorted.v, &params)?;
    Ok(weighted_view(w, vy, vu, vv))
}

/// Largest value the unnormalized score can reach for these weights and
/// this depth weighting factor; the normalization denominator.
pub fn hv3d_max(w: &WeightVector, depth_weight_factor: f64) -> Result<f64> {
    w.validate()?;
    let max = 2.0 * w.w1 + 4.0 * w.w4 + w.w2 + w.w3 * depth_weight_factor;
    if max <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok(max)
}

/// All weight-independent measurements for one aligned frame pair.
pub fn score_components(
    reference: StereoView<'_>,
    distorted: StereoView<'_>,
    params: &CyclopeanParams,
) -> Result<FrameComponents> {
    if !reference.left.same_geometry(distorted.left)
        || !reference.right.same_geometry(distorted.right)
    {
        return Err(Error::DimensionMismatch {
            left: format!("reference {}x{}", reference.left.width, reference.left.height),
            right: format!("distorted {}x{}", distorted.left.width, distorted.left.height),
        });
    }
    let vp = &params.vif;
    let sp = &params.ssim;

    let vif_y_left = vif(&reference.left.y, &distorted.left.y, vp)?;
    let vif_u_left = vif(&reference.left.u, &distorted.left.u, vp)?;
    let vif_v_left = vif(&reference.left.v, &distorted.left.v, vp)?;
    let vif_y_right = vif(&reference.right.y, &distorted.right.y, vp)?;
    let vif_u_right = vif(&reference.right.u, &distorted.right.u, vp)?;
    let vif_v_right = vif(&reference.right.v, &distorted.right.v, vp)?;

    let block_ssim = fused_similarity(
        reference.left,
        reference.right,
        distorted.left,
        distorted.right,
        params,
    )?;

    let depth_fid_left =
        vif(&reference.depth_left.d, &distorted.depth_left.d, vp)?.clamp(0.0, 1.0);
    let depth_fid_right =
        vif(&reference.depth_right.d, &distorted.depth_right.d, vp)?.clamp(0.0, 1.0);
    let factor_left = weighting_factor(&local_variance_weights(reference.depth_left)?);
    let factor_right = weighting_factor(&local_variance_weights(reference.depth_right)?);

    Ok(FrameComponents {
        vif_y_left,
        vif_u_left,
        vif_v_left,
        vif_y_right,
        vif_u_right,
        vif_v_right,
        block_ssim,
        depth_fid_left,
        depth_fid_right,
        factor_left,
        factor_right,
        psnr_left: psnr(&reference.left.y, &distorted.left.y)?,
        psnr_right: psnr(&reference.right.y, &distorted.right.y)?,
        ssim_left: ssim(&reference.left.y, &distorted.left.y, sp)?,
        ssim_right: ssim(&reference.right.y, &distorted.right.y, sp)?,
        msssim_left: ms_ssim(&reference.left.y, &distorted.left.y, sp)?,
        msssim_right: ms_ssim(&reference.right.y, &distorted.right.y, sp)?,
    })
}

/// Normalized combination of already-weighted component values: the
/// numerator of the final score over its content-dependent maximum.
pub(crate) fn combine(
    w: &WeightVector,
    q_left: f64,
    q_right: f64,
    q_rl: f64,
    q_d: f64,
    factor: f64,
) -> Result<(f64, f64)> {
    let max = hv3d_max(w, factor)?;
    Ok((max, (q_left + q_right + w.w2 * q_rl + w.w3 * q_d) / max))
}

/// Applies one weight vector to measured components. The numerator is the
/// two view terms plus the weighted cyclopean and depth terms; dividing by
/// the content-dependent maximum normalizes identity to 1.
pub fn assemble(c: &FrameComponents, w: &WeightVector) -> Result<FrameRecord> {
    w.validate()?;
    let q_left = weighted_view(w, c.vif_y_left, c.vif_u_left, c.vif_v_left);
    let q_right = weighted_view(w, c.vif_y_right, c.vif_u_right, c.vif_v_right);

    let depth_fid = (c.depth_fid_left + c.depth_fid_right) / 2.0;
    let q_rl = q_cyclopean_from_parts(depth_fid, w.beta, c.block_ssim);
    let q_d = (c.depth_fid_left.powf(w.beta) * c.factor_left
        + c.depth_fid_right.powf(w.beta) * c.factor_right)
        / 2.0;
    let factor = (c.factor_left + c.factor_right) / 2.0;

    let (max, hv3d) = combine(w, q_left, q_right, q_rl, q_d, factor)?;

    Ok(FrameRecord {
        q_left,
        q_right,
        q_rl,
        q_d,
        hv3d_max: max,
        hv3d,
        psnr_l: c.psnr_left,
        psnr_r: c.psnr_right,
        ssim_l: c.ssim_left,
        ssim_r: c.ssim_right,
        msssim_l: c.msssim_left,
        msssim_r: c.msssim_right,
        vifp_l: c.vif_y_left,
        vifp_r: c.vif_y_right,
    })
}

fn check_sequences(reference: &StereoSequence, distorted: &StereoSequence) -> Result<()> {
    if !reference.same_geometry(distorted) {
        return Err(Error::DimensionMismatch {
            left: format!(
                "reference {}x{}, {} frames",
                reference.width(),
                reference.height(),
                reference.frame_count
            ),
            right: format!(
                "distorted {}x{}, {} frames",
                distorted.width(),
                distorted.height(),
                distorted.frame_count
            ),
        });
    }
    Ok(())
}

/// Components for every aligned frame pair, frame-parallel with a fixed
/// output order.
pub fn sequence_components(
    reference: &StereoSequence,
    distorted: &StereoSequence,
    params: &CyclopeanParams,
) -> Result<Vec<FrameComponents>> {
    check_sequences(reference, distorted)?;
    let p = *params;
    exec::try_map_indexed(reference.frame_count, move |i| {
        score_components(reference.view(i), distorted.view(i), &p)
    })
}

fn pool(frames: &[FrameRecord]) -> FrameRecord {
    let n = frames.len() as f64;
    let mut acc = [0.0f64; 14];
    for r in frames {
        for (a, v) in acc.iter_mut().zip(r.fields()) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= n;
    }
    FrameRecord::from_fields(acc)
}

/// Scores a distorted sequence against its reference: per-frame records
/// pooled by arithmetic mean. Deterministic for a given input regardless
/// of worker count.
pub fn hv3d_score(
    reference: &StereoSequence,
    distorted: &StereoSequence,
    w: &WeightVector,
    params: &CyclopeanParams,
) -> Result<MetricReport> {
    w.validate()?;
    let components = sequence_components(reference, distorted, params)?;
    let frames = components
        .iter()
        .map(|c| assemble(c, w))
        .collect::<Result<Vec<_>>>()?;
    let pooled = pool(&frames);
    Ok(MetricReport {
        frames,
        pooled,
        calibrated: w.calibrated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_sequence, SynthParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_seq(seed: u64, frames: usize) -> StereoSequence {
        synthesize_sequence(&SynthParams {
            width: 192,
            height: 192,
            frames,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    fn noisy_copy(seq: &StereoSequence, sigma: f64, seed: u64) -> StereoSequence {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut out = seq.clone();
        for frame in out.left.iter_mut().chain(out.right.iter_mut()) {
            for v in frame
                .y
                .data
                .iter_mut()
                .chain(frame.u.data.iter_mut())
                .chain(frame.v.data.iter_mut())
            {
                *v = (*v as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
            }
        }
        for d in out.depth_left.iter_mut().chain(out.depth_right.iter_mut()) {
            for v in d.d.data.iter_mut() {
                *v = (*v as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
            }
        }
        out
    }

    #[test]
    fn weight_validation() {
        assert!(WeightVector::default().validate().is_ok());
        let zero = WeightVector { w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0, ..Default::default() };
        assert!(matches!(zero.validate(), Err(Error::DegenerateWeights)));
        let neg = WeightVector { w2: -0.1, ..Default::default() };
        assert!(matches!(neg.validate(), Err(Error::DegenerateWeights)));
        let bad_beta = WeightVector { beta: 1.5, ..Default::default() };
        assert!(matches!(bad_beta.validate(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn weights_json_roundtrip_and_default_flag() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        let w = WeightVector { calibrated: true, ..Default::default() };
        w.to_file(&path).unwrap();
        assert_eq!(WeightVector::from_file(&path).unwrap(), w);

        // A weights file without the flag parses as uncalibrated.
        let bare = r#"{"w1":1.0,"w2":1.0,"w3":1.0,"w4":0.5,"beta":0.7}"#;
        let parsed: WeightVector = serde_json::from_str(bare).unwrap();
        assert!(!parsed.calibrated);
        assert_eq!(parsed.w4, 0.5);
    }

    #[test]
    fn hv3d_max_hand_cases() {
        let w = WeightVector { w1: 1.0, w2: 1.0, w3: 1.0, w4: 1.0, ..Default::default() };
        assert_eq!(hv3d_max(&w, 1.0).unwrap(), 8.0);
        assert_eq!(hv3d_max(&w, 0.625).unwrap(), 7.625);
        let zero = WeightVector { w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0, ..Default::default() };
        assert!(matches!(hv3d_max(&zero, 1.0), Err(Error::DegenerateWeights)));
    }

    #[test]
    fn weighted_view_hand_sums() {
        let w = WeightVector { w1: 1.0, w4: 0.5, ..Default::default() };
        assert_eq!(weighted_view(&w, 1.0, 1.0, 1.0), 2.0);
        assert!((weighted_view(&w, 0.8, 0.6, 0.4) - 1.3).abs() < 1e-12);
        let zero = WeightVector { w1: 0.0, w4: 0.0, ..Default::default() };
        assert_eq!(weighted_view(&zero, 0.9, 0.9, 0.9), 0.0);
    }

    #[test]
    fn view_quality_identity() {
        let seq = small_seq(31, 1);
        let w = WeightVector { w1: 1.0, w4: 0.5, ..Default::default() };
        let q = view_quality(&seq.left[0], &seq.left[0], &w).unwrap();
        assert!((q - 2.0).abs() < 1e-6);
    }

    #[test]
    fn combine_hand_case() {
        // Component values Q_L = Q_R = 2 (w1=1, w4=0.5 at identity),
        // Q_RL = 0.9, Q_D = 0.8, factor 1: (2+2+0.9+0.8)/(2+2+1+1).
        let w = WeightVector { w1: 1.0, w2: 1.0, w3: 1.0, w4: 0.5, beta: 0.7, calibrated: false };
        let (max, hv3d) = combine(&w, 2.0, 2.0, 0.9, 0.8, 1.0).unwrap();
        assert_eq!(max, 6.0);
        assert!((hv3d - 0.95).abs() < 1e-12);
    }

    #[test]
    fn assemble_uses_components_consistently() {
        let w = WeightVector { w1: 1.0, w2: 1.0, w3: 1.0, w4: 0.5, beta: 0.7, calibrated: false };
        let c = FrameComponents {
            vif_y_left: 1.0,
            vif_u_left: 1.0,
            vif_v_left: 1.0,
            vif_y_right: 1.0,
            vif_u_right: 1.0,
            vif_v_right: 1.0,
            block_ssim: 0.9,
            depth_fid_left: 1.0,
            depth_fid_right: 1.0,
            factor_left: 0.8,
            factor_right: 0.8,
            psnr_left: 40.0,
            psnr_right: 40.0,
            ssim_left: 1.0,
            ssim_right: 1.0,
            msssim_left: 1.0,
            msssim_right: 1.0,
        };
        let r = assemble(&c, &w).unwrap();
        assert!((r.q_left - 2.0).abs() < 1e-12);
        assert!((r.q_right - 2.0).abs() < 1e-12);
        assert!((r.q_rl - 0.9).abs() < 1e-12, "unit fidelity passes block ssim through");
        assert!((r.q_d - 0.8).abs() < 1e-12, "unit fidelity passes the factor through");
        assert!((r.hv3d_max - (2.0 + 2.0 + 1.0 + 0.8)).abs() < 1e-12);
        let want = (2.0 + 2.0 + 0.9 + 0.8) / r.hv3d_max;
        assert!((r.hv3d - want).abs() < 1e-12);
        assert_eq!(r.vifp_l, 1.0);
    }

    #[test]
    fn identity_scores_one_for_any_weights() {
        let seq = small_seq(32, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..4 {
            let w = WeightVector {
                w1: rng.random_range(0.01..2.0),
                w2: rng.random_range(0.01..2.0),
                w3: rng.random_range(0.01..2.0),
                w4: rng.random_range(0.01..2.0),
                beta: rng.random_range(0.05..=1.0),
                calibrated: false,
            };
            let report = hv3d_score(&seq, &seq, &w, &CyclopeanParams::default()).unwrap();
            assert!((report.pooled.hv3d - 1.0).abs() < 1e-6, "{:?}", report.pooled);
            assert!((report.pooled.q_rl - 1.0).abs() < 1e-6);
            assert_eq!(report.pooled.psnr_l, f64::INFINITY);
            assert_eq!(report.pooled.ssim_l, 1.0);
        }
    }

    #[test]
    fn zero_extra_terms_reduce_to_mean_luma_vif() {
        let seq = small_seq(33, 2);
        let dist = noisy_copy(&seq, 6.0, 34);
        let w = WeightVector { w1: 1.0, w2: 0.0, w3: 0.0, w4: 0.0, ..Default::default() };
        let report = hv3d_score(&seq, &dist, &w, &CyclopeanParams::default()).unwrap();

        let vp = crate::metrics_2d::VifParams::default();
        let mut want = 0.0;
        for i in 0..seq.frame_count {
            let vl = vif(&seq.left[i].y, &dist.left[i].y, &vp).unwrap().clamp(0.0, 1.0);
            let vr = vif(&seq.right[i].y, &dist.right[i].y, &vp).unwrap().clamp(0.0, 1.0);
            want += (vl + vr) / 2.0;
        }
        want /= seq.frame_count as f64;
        assert!((report.pooled.hv3d - want).abs() < 1e-9);
    }

    #[test]
    fn numerator_consistency_and_bounds() {
        let seq = small_seq(35, 2);
        let dist = noisy_copy(&seq, 10.0, 36);
        let w = WeightVector::default();
        let report = hv3d_score(&seq, &dist, &w, &CyclopeanParams::default()).unwrap();
        for r in &report.frames {
            assert!(r.hv3d >= 0.0 && r.hv3d <= 1.0);
            let numerator = r.q_left + r.q_right + w.w2 * r.q_rl + w.w3 * r.q_d;
            assert!((r.hv3d * r.hv3d_max - numerator).abs() < 1e-9);
            assert!(r.hv3d < 1.0, "noise must lower the score");
        }
    }

    #[test]
    fn csv_layout() {
        let seq = small_seq(37, 2);
        let report = hv3d_score(&seq, &seq, &WeightVector::default(), &CyclopeanParams::default())
            .unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], REPORT_HEADER);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[2].starts_with("1,"));
        assert!(lines[3].starts_with("pooled,"));
        let cells: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(cells.len(), 15);
        assert_eq!(cells[6], "1.000000");
        assert_eq!(cells[7], "inf");
        assert_eq!(cells[9], "1.000000");
    }

    #[test]
    fn pooled_row_is_arithmetic_mean() {
        let seq = small_seq(38, 3);
        let dist = noisy_copy(&seq, 4.0, 39);
        let report =
            hv3d_score(&seq, &dist, &WeightVector::default(), &CyclopeanParams::default()).unwrap();
        let mean: f64 =
            report.frames.iter().map(|r| r.hv3d).sum::<f64>() / report.frames.len() as f64;
        assert!((report.pooled.hv3d - mean).abs() < 1e-12);
    }

    #[test]
    fn mismatched_sequences_error() {
        let a = small_seq(40, 1);
        let b = synthesize_sequence(&SynthParams {
            width: 192,
            height: 256,
            frames: 1,
            seed: 40,
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            hv3d_score(&a, &b, &WeightVector::default(), &CyclopeanParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
