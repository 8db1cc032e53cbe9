//! Batch front end for the HV3D metric: scoring, 2D baselines, weight
//! calibration, correlation evaluation, and synthetic degradation.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 computation error. No output file is left behind on nonzero exit.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hv3d_core::calibrate::{
    extract_features, fit_weights, logistic_fit, parse_feature_csv, pearson, spearman, FeatureRow,
};
use hv3d_core::cyclopean::CyclopeanParams;
use hv3d_core::distort::{apply_distortion, DistortionKind, DistortionSpec};
use hv3d_core::error::{Error, Result};
use hv3d_core::exec;
use hv3d_core::metrics_2d::{ms_ssim, psnr, ssim, vif, SsimParams, VifParams};
use hv3d_core::score::{format_score, hv3d_score, WeightVector};
use hv3d_core::video_io::{write_depth_sequence, write_yuv_sequence, SequenceManifest};

#[derive(Parser)]
#[command(
    name = "hv3d",
    version,
    about = "Full-reference stereoscopic 3D video quality assessment"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Score a distorted sequence against its reference.
    Score(ScoreArgs),
    /// Per-view PSNR/SSIM/MS-SSIM/VIFp without the stereo terms.
    Baselines(BaselinesArgs),
    /// Fit term weights to mean opinion scores.
    Calibrate(CalibrateArgs),
    /// Correlate per-sequence metric scores with MOS.
    Evaluate(EvaluateArgs),
    /// Apply a deterministic synthetic degradation.
    Distort(DistortArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// Reference sequence manifest (JSON).
    #[arg(long)]
    manifest_ref: PathBuf,
    /// Distorted sequence manifest (JSON).
    #[arg(long)]
    manifest_dist: PathBuf,
    /// Weights file; defaults to the uncalibrated placeholder weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Override the fidelity exponent.
    #[arg(long)]
    beta: Option<f64>,
    /// Disparity search radius in pixels.
    #[arg(long, default_value_t = 64)]
    search_range: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BaselinesArgs {
    #[arg(long)]
    manifest_ref: PathBuf,
    #[arg(long)]
    manifest_dist: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MosScale {
    /// Ten-scale when any score exceeds 1, otherwise already unit.
    Auto,
    /// Scores are already in [0, 1].
    Unit,
    /// Scores are on the 1-10 scale; normalized as (mos-1)/9.
    Ten,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Feature table (`sequence,f_luma,f_chroma,f_cyclopean,f_depth,mos`)
    /// or manifest pairs (`ref_manifest,dist_manifest,mos`).
    #[arg(long)]
    mos_csv: PathBuf,
    /// MOS scale of the input column.
    #[arg(long, value_enum, default_value_t = MosScale::Auto)]
    mos_scale: MosScale,
    /// Fidelity exponent used when computing features from manifests.
    #[arg(long)]
    beta: Option<f64>,
    /// Disparity search radius for feature extraction.
    #[arg(long, default_value_t = 64)]
    search_range: usize,
    /// Output weights file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Per-sequence scores: `sequence,<metric...>,mos` with metrics among
    /// psnr, ssim, vqm, vifp, msssim, hv3d.
    #[arg(long)]
    mos_csv: PathBuf,
    #[arg(long, value_enum, default_value_t = MosScale::Auto)]
    mos_scale: MosScale,
    /// Output table CSV; point series lands next to it as `<stem>_points.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistortArgs {
    /// Input sequence manifest.
    #[arg(long)]
    manifest_ref: PathBuf,
    /// Degradation kind: gaussian_noise, gaussian_blur, dct_quantize, depth_noise.
    #[arg(long)]
    kind: String,
    /// Degradation strength (> 0).
    #[arg(long)]
    level: f64,
    /// Reproducibility seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output manifest path; streams are written next to it.
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingFile(_)
        | Error::TruncatedFrame { .. }
        | Error::FrameCountMismatch { .. }
        | Error::Io(_) => 3,
        Error::PlaneTooSmall { .. } | Error::ZeroVariance => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.cmd {
        Cmd::Score(args) => cmd_score(&args),
        Cmd::Baselines(args) => cmd_baselines(&args),
        Cmd::Calibrate(args) => cmd_calibrate(&args),
        Cmd::Evaluate(args) => cmd_evaluate(&args),
        Cmd::Distort(args) => cmd_distort(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// `HV3D_THREADS` caps the rayon worker count; results are byte-identical
/// for any value.
fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("HV3D_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("HV3D_THREADS={raw:?} is not a number")))?;
        if n == 0 {
            return Err(Error::InvalidParameter(
                "HV3D_THREADS must be at least 1".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Writes through a temp file in the target directory so failed or
/// interrupted runs never leave a partial output.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn load_weights(path: Option<&Path>, beta: Option<f64>) -> Result<WeightVector> {
    let mut w = match path {
        Some(p) => WeightVector::from_file(p)?,
        None => WeightVector::default(),
    };
    if let Some(b) = beta {
        w.beta = b;
    }
    w.validate()?;
    Ok(w)
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let w = load_weights(args.weights.as_deref(), args.beta)?;
    if !w.calibrated {
        eprintln!("note: using uncalibrated placeholder weights; run `hv3d calibrate` to fit them");
    }
    let params = CyclopeanParams {
        search_range: args.search_range,
        ..CyclopeanParams::default()
    };
    let reference = SequenceManifest::from_file(&args.manifest_ref)?.load()?;
    let distorted = SequenceManifest::from_file(&args.manifest_dist)?.load()?;
    let report = hv3d_score(&reference, &distorted, &w, &params)?;
    write_atomic(&args.out, &report.to_csv())
}

const BASELINE_HEADER: &str = "frame,psnr_l,psnr_r,ssim_l,ssim_r,msssim_l,msssim_r,vifp_l,vifp_r";

fn cmd_baselines(args: &BaselinesArgs) -> Result<()> {
    let reference = SequenceManifest::from_file(&args.manifest_ref)?.load()?;
    let distorted = SequenceManifest::from_file(&args.manifest_dist)?.load()?;
    if !reference.same_geometry(&distorted) {
        return Err(Error::DimensionMismatch {
            left: format!("reference {}x{}", reference.width(), reference.height()),
            right: format!("distorted {}x{}", distorted.width(), distorted.height()),
        });
    }
    let sp = SsimParams::default();
    let vp = VifParams::default();
    let rows: Vec<[f64; 8]> = exec::try_map_indexed(reference.frame_count, |i| {
        let r = reference.view(i);
        let d = distorted.view(i);
        Ok::<_, Error>([
            psnr(&r.left.y, &d.left.y)?,
            psnr(&r.right.y, &d.right.y)?,
            ssim(&r.left.y, &d.left.y, &sp)?,
            ssim(&r.right.y, &d.right.y, &sp)?,
            ms_ssim(&r.left.y, &d.left.y, &sp)?,
            ms_ssim(&r.right.y, &d.right.y, &sp)?,
            vif(&r.left.y, &d.left.y, &vp)?,
            vif(&r.right.y, &d.right.y, &vp)?,
        ])
    })?;

    let mut csv = String::from(BASELINE_HEADER);
    csv.push('\n');
    let mut pooled = [0.0f64; 8];
    for (i, row) in rows.iter().enumerate() {
        write!(csv, "{i}").expect("string write");
        for (k, v) in row.iter().enumerate() {
            pooled[k] += v;
            write!(csv, ",{}", format_score(*v)).expect("string write");
        }
        csv.push('\n');
    }
    csv.push_str("pooled");
    for v in pooled {
        write!(csv, ",{}", format_score(v / rows.len() as f64)).expect("string write");
    }
    csv.push('\n');
    write_atomic(&args.out, &csv)
}

fn normalize_mos(rows: &mut [(String, FeatureRow)], scale: MosScale) -> Result<()> {
    let ten = match scale {
        MosScale::Ten => true,
        MosScale::Unit => false,
        MosScale::Auto => rows.iter().any(|(_, r)| r.mos > 1.0),
    };
    for (name, row) in rows.iter_mut() {
        if ten {
            row.mos = (row.mos - 1.0) / 9.0;
        }
        if !(0.0..=1.0).contains(&row.mos) {
            return Err(Error::InvalidParameter(format!(
                "sequence {name:?}: mos {} outside [0, 1] after scaling",
                row.mos
            )));
        }
    }
    Ok(())
}

/// Manifest-pairs calibration input: `ref_manifest,dist_manifest,mos`,
/// paths resolved against the CSV's directory.
fn parse_pairs_csv(text: &str, base: &Path) -> Result<Vec<(PathBuf, PathBuf, f64)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Csv("empty file".into()))?;
    if header.trim() != "ref_manifest,dist_manifest,mos" {
        return Err(Error::Csv(format!("unexpected header: {header}")));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(Error::Csv(format!(
                "line {}: expected 3 cells, got {}",
                lineno + 2,
                cells.len()
            )));
        }
        let mos = cells[2]
            .parse::<f64>()
            .map_err(|_| Error::Csv(format!("line {}: bad number {:?}", lineno + 2, cells[2])))?;
        let resolve = |cell: &str| {
            let p = PathBuf::from(cell);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };
        out.push((resolve(cells[0]), resolve(cells[1]), mos));
    }
    Ok(out)
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    if let Some(b) = args.beta {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta {b} outside (0, 1]")));
        }
    }
    let text = std::fs::read_to_string(&args.mos_csv).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(args.mos_csv.clone()),
        _ => Error::Io(e),
    })?;
    let header = text.lines().next().unwrap_or("").trim();

    let mut rows: Vec<(String, FeatureRow)> = if header.starts_with("sequence,") {
        parse_feature_csv(&text)?
    } else if header == "ref_manifest,dist_manifest,mos" {
        let beta = args.beta.unwrap_or(WeightVector::default().beta);
        let params = CyclopeanParams {
            search_range: args.search_range,
            ..CyclopeanParams::default()
        };
        let base = args.mos_csv.parent().unwrap_or(Path::new(".")).to_path_buf();
        let pairs = parse_pairs_csv(&text, &base)?;
        let mut rows = Vec::with_capacity(pairs.len());
        for (ref_path, dist_path, mos) in pairs {
            let reference = SequenceManifest::from_file(&ref_path)?.load()?;
            let distorted = SequenceManifest::from_file(&dist_path)?.load()?;
            let features = extract_features(&reference, &distorted, beta, &params)?;
            rows.push((dist_path.display().to_string(), features.with_mos(mos)));
        }
        rows
    } else {
        return Err(Error::Csv(format!("unrecognized header: {header}")));
    };

    normalize_mos(&mut rows, args.mos_scale)?;
    let features: Vec<FeatureRow> = rows.iter().map(|(_, r)| *r).collect();
    let w = fit_weights(&features)?;

    let rms = {
        let sse: f64 = features
            .iter()
            .map(|r| {
                let p = w.w1 * r.f_luma + w.w4 * r.f_chroma + w.w2 * r.f_cyclopean + w.w3 * r.f_depth;
                (p - r.mos).powi(2)
            })
            .sum();
        (sse / features.len() as f64).sqrt()
    };
    w.to_file(&args.out)?;
    println!(
        "fitted weights: w1={:.6} w2={:.6} w3={:.6} w4={:.6} beta={:.2} (residual rms {:.6} over {} rows)",
        w.w1,
        w.w2,
        w.w3,
        w.w4,
        w.beta,
        rms,
        features.len()
    );
    Ok(())
}

/// Table 2 row order; VQM appears only when supplied.
const METRIC_ORDER: [(&str, &str); 6] = [
    ("psnr", "PSNR"),
    ("ssim", "SSIM"),
    ("vqm", "VQM"),
    ("vifp", "VIFp"),
    ("msssim", "MS-SSIM"),
    ("hv3d", "HV3D"),
];

struct EvalInput {
    metrics: Vec<String>,
    sequences: Vec<String>,
    /// One score column per metric, row-aligned with `sequences`.
    scores: Vec<Vec<f64>>,
    mos: Vec<f64>,
}

fn parse_eval_csv(text: &str) -> Result<EvalInput> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Csv("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "sequence" || cols[cols.len() - 1] != "mos" {
        return Err(Error::Csv(format!(
            "header must be sequence,<metrics...>,mos; got {header}"
        )));
    }
    let metrics: Vec<String> = cols[1..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    for m in &metrics {
        if !METRIC_ORDER.iter().any(|(key, _)| key == m) {
            return Err(Error::Csv(format!("unknown metric column {m:?}")));
        }
    }
    let mut sequences = Vec::new();
    let mut scores = vec![Vec::new(); metrics.len()];
    let mut mos = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(Error::Csv(format!(
                "line {}: expected {} cells, got {}",
                lineno + 2,
                cols.len(),
                cells.len()
            )));
        }
        sequences.push(cells[0].to_string());
        for (k, cell) in cells[1..cells.len() - 1].iter().enumerate() {
            let v = if *cell == "inf" {
                f64::INFINITY
            } else {
                cell.parse::<f64>().map_err(|_| {
                    Error::Csv(format!("line {}: bad number {cell:?}", lineno + 2))
                })?
            };
            scores[k].push(v);
        }
        mos.push(cells[cells.len() - 1].parse::<f64>().map_err(|_| {
            Error::Csv(format!("line {}: bad mos {:?}", lineno + 2, cells[cells.len() - 1]))
        })?);
    }
    Ok(EvalInput {
        metrics,
        sequences,
        scores,
        mos,
    })
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.mos_csv).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(args.mos_csv.clone()),
        _ => Error::Io(e),
    })?;
    let input = parse_eval_csv(&text)?;
    let mut mos = input.mos.clone();
    let ten = match args.mos_scale {
        MosScale::Ten => true,
        MosScale::Unit => false,
        MosScale::Auto => mos.iter().any(|&m| m > 1.0),
    };
    if ten {
        for m in &mut mos {
            *m = (*m - 1.0) / 9.0;
        }
    }

    let mut table = String::from("metric,scc,pcc_raw,pcc_fitted\n");
    let mut points = String::from("metric,sequence,score,mos,fitted_mos\n");
    for (key, display) in METRIC_ORDER {
        let Some(col) = input.metrics.iter().position(|m| m == key) else {
            continue;
        };
        let scores = &input.scores[col];
        let scc = spearman(scores, &mos)?;
        let pcc_raw = pearson(scores, &mos)?;
        let fit = logistic_fit(scores, &mos)?;
        let fitted: Vec<f64> = scores.iter().map(|&s| fit.predict(s)).collect();
        let pcc_fitted = pearson(&fitted, &mos)?;
        writeln!(
            table,
            "{display},{},{},{}",
            format_score(scc),
            format_score(pcc_raw),
            format_score(pcc_fitted)
        )
        .expect("string write");
        for (i, seq) in input.sequences.iter().enumerate() {
            writeln!(
                points,
                "{display},{seq},{},{},{}",
                format_score(scores[i]),
                format_score(mos[i]),
                format_score(fitted[i])
            )
            .expect("string write");
        }
    }

    let stem = args.out.file_stem().unwrap_or_default().to_string_lossy();
    let points_path = args
        .out
        .with_file_name(format!("{stem}_points.csv"));
    write_atomic(&args.out, &table)?;
    write_atomic(&points_path, &points)
}

fn cmd_distort(args: &DistortArgs) -> Result<()> {
    let kind: DistortionKind = args.kind.parse()?;
    let spec = DistortionSpec {
        kind,
        level: args.level,
        seed: args.seed,
    };
    spec.validate()?;
    let input = SequenceManifest::from_file(&args.manifest_ref)?.load()?;
    let output = apply_distortion(&input, &spec)?;

    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let stem = args
        .out
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .to_string();
    let names = [
        format!("{stem}_left.yuv"),
        format!("{stem}_right.yuv"),
        format!("{stem}_depth_left.yuv"),
        format!("{stem}_depth_right.yuv"),
    ];

    // Stage every stream in temp files, then persist all five outputs so
    // a failure cannot leave a partial set behind.
    let tmp_left = tempfile::NamedTempFile::new_in(&dir)?;
    let tmp_right = tempfile::NamedTempFile::new_in(&dir)?;
    let tmp_dl = tempfile::NamedTempFile::new_in(&dir)?;
    let tmp_dr = tempfile::NamedTempFile::new_in(&dir)?;
    write_yuv_sequence(tmp_left.path(), &output.left)?;
    write_yuv_sequence(tmp_right.path(), &output.right)?;
    write_depth_sequence(tmp_dl.path(), &output.depth_left)?;
    write_depth_sequence(tmp_dr.path(), &output.depth_right)?;

    let manifest = SequenceManifest {
        left: PathBuf::from(&names[0]),
        right: PathBuf::from(&names[1]),
        depth_left: PathBuf::from(&names[2]),
        depth_right: PathBuf::from(&names[3]),
        width: output.width(),
        height: output.height(),
        frame_count: output.frame_count,
    };
    for (tmp, name) in [tmp_left, tmp_right, tmp_dl, tmp_dr].into_iter().zip(&names) {
        tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    }
    manifest.to_file(&args.out)?;
    Ok(())
}
