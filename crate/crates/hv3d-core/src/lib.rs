//! Full-reference stereoscopic 3D video quality assessment.
//!
//! The HV3D score models the viewer's percept with three ingredients: the
//! fidelity of each coded view (pixel-domain VIF on luma and chroma), the
//! quality of the fused cyclopean image (SSIM over CSF-weighted block DCT
//! spectra of disparity-matched block pairs), and the fidelity of the
//! depth information weighted by how much depth detail each region holds.
//! A weighted sum of those terms, normalized by its content-dependent
//! maximum, yields a score in [0, 1] where 1 means the distorted sequence
//! is indistinguishable from the reference.
//!
//! The crate also ships the supporting toolkit: raw YUV 4:2:0 and depth
//! map I/O, classical 2D baselines (PSNR, SSIM, MS-SSIM, VIFp), seeded
//! synthetic sequence generation and degradation operators for testing,
//! and least-squares calibration of the term weights against subjective
//! scores.
//!
//! Frame-level work runs on a rayon pool when the default `parallel`
//! feature is enabled; results are byte-identical to the sequential
//! build.

pub mod calibrate;
pub mod cyclopean;
pub mod depth_quality;
pub mod distort;
pub mod error;
pub mod exec;
pub mod filters;
pub mod metrics_2d;
pub mod score;
pub mod synth;
pub mod transform;
pub mod video_io;

pub use calibrate::{
    extract_features, fit_weights, logistic_fit, pearson, spearman, FeatureRow, LogisticFit,
    SequenceFeatures,
};
pub use cyclopean::{q_cyclopean, CyclopeanParams};
pub use depth_quality::{q_depth, DepthParams};
pub use distort::{apply_distortion, DistortionKind, DistortionSpec};
pub use error::{Error, Result};
pub use metrics_2d::{ms_ssim, psnr, ssim, vif, SsimParams, VifParams};
pub use score::{hv3d_score, MetricReport, WeightVector};
pub use synth::{synthesize_sequence, SynthParams};
pub use video_io::{SequenceManifest, StereoSequence};
