//! End-to-end CLI checks driven through the compiled binary, including
//! the thread-count determinism acceptance criterion.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use hv3d_core::score::WeightVector;
use hv3d_core::synth::{synthesize_sequence, SynthParams};
use hv3d_core::video_io::{write_depth_sequence, write_yuv_sequence, SequenceManifest};

fn hv3d(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hv3d"));
    cmd.args(args).env_remove("HV3D_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn exit_of(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Synthesizes a sequence and lays it out as four streams plus manifest.
fn write_corpus(dir: &Path, name: &str, params: &SynthParams) -> PathBuf {
    let seq = synthesize_sequence(params).unwrap();
    let files = [
        format!("{name}_left.yuv"),
        format!("{name}_right.yuv"),
        format!("{name}_depth_left.yuv"),
        format!("{name}_depth_right.yuv"),
    ];
    write_yuv_sequence(&dir.join(&files[0]), &seq.left).unwrap();
    write_yuv_sequence(&dir.join(&files[1]), &seq.right).unwrap();
    write_depth_sequence(&dir.join(&files[2]), &seq.depth_left).unwrap();
    write_depth_sequence(&dir.join(&files[3]), &seq.depth_right).unwrap();
    let manifest = SequenceManifest {
        left: PathBuf::from(&files[0]),
        right: PathBuf::from(&files[1]),
        depth_left: PathBuf::from(&files[2]),
        depth_right: PathBuf::from(&files[3]),
        width: params.width,
        height: params.height,
        frame_count: params.frames,
    };
    let path = dir.join(format!("{name}.json"));
    manifest.to_file(&path).unwrap();
    path
}

fn small_params(seed: u64) -> SynthParams {
    SynthParams {
        width: 320,
        height: 192,
        frames: 2,
        seed,
        ..Default::default()
    }
}

fn csv_row<'a>(csv: &'a str, key: &str) -> Vec<&'a str> {
    csv.lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("row {key} missing in:\n{csv}"))
        .split(',')
        .collect()
}

#[test]
fn criterion_8_thread_count_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let ref_manifest = write_corpus(dir.path(), "ref", &small_params(301));

    let dist_manifest = dir.path().join("dist.json");
    let out = hv3d(
        &[
            "distort",
            "--manifest-ref",
            ref_manifest.to_str().unwrap(),
            "--kind",
            "dct_quantize",
            "--level",
            "2.0",
            "--seed",
            "5",
            "--out",
            dist_manifest.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));

    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out_csv = dir.path().join(format!("score_{threads}.csv"));
        let out = hv3d(
            &[
                "score",
                "--manifest-ref",
                ref_manifest.to_str().unwrap(),
                "--manifest-dist",
                dist_manifest.to_str().unwrap(),
                "--out",
                out_csv.to_str().unwrap(),
            ],
            &[("HV3D_THREADS", threads)],
        );
        assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
        outputs.push(std::fs::read(&out_csv).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(
        outputs[0], outputs[1],
        "CSV differs between HV3D_THREADS=1 and 8"
    );
    println!(
        "PASS criterion 8: score CSV byte-identical for HV3D_THREADS=1 and 8 ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn score_identity_reports_unity_and_uncalibrated_note() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), "ref", &small_params(302));
    let out_csv = dir.path().join("report.csv");
    let out = hv3d(
        &[
            "score",
            "--manifest-ref",
            manifest.to_str().unwrap(),
            "--manifest-dist",
            manifest.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("uncalibrated"));

    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let pooled = csv_row(&csv, "pooled");
    assert_eq!(pooled[6], "1.000000", "hv3d column: {csv}");
    assert_eq!(pooled[7], "inf", "psnr_l column");
    assert_eq!(pooled[9], "1.000000", "ssim_l column");
    // Two frame rows plus header and pooled row.
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn score_missing_stream_exits_3_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = dir.path().join("broken.json");
    let manifest = SequenceManifest {
        left: PathBuf::from("absent_left.yuv"),
        right: PathBuf::from("absent_right.yuv"),
        depth_left: PathBuf::from("absent_dl.yuv"),
        depth_right: PathBuf::from("absent_dr.yuv"),
        width: 320,
        height: 192,
        frame_count: 2,
    };
    manifest.to_file(&manifest_path).unwrap();
    let out_csv = dir.path().join("report.csv");
    let out = hv3d(
        &[
            "score",
            "--manifest-ref",
            manifest_path.to_str().unwrap(),
            "--manifest-dist",
            manifest_path.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 3, "{}", stderr_of(&out));
    assert!(!out_csv.exists(), "partial CSV left behind");
}

#[test]
fn score_zero_weights_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), "ref", &small_params(303));
    let weights_path = dir.path().join("zero.json");
    std::fs::write(
        &weights_path,
        r#"{"w1":0.0,"w2":0.0,"w3":0.0,"w4":0.0,"beta":0.7}"#,
    )
    .unwrap();
    let out_csv = dir.path().join("report.csv");
    let out = hv3d(
        &[
            "score",
            "--manifest-ref",
            manifest.to_str().unwrap(),
            "--manifest-dist",
            manifest.to_str().unwrap(),
            "--weights",
            weights_path.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("weights"));
    assert!(!out_csv.exists());
}

#[test]
fn baselines_identity_and_geometry_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), "ref", &small_params(304));
    let out_csv = dir.path().join("baselines.csv");
    let out = hv3d(
        &[
            "baselines",
            "--manifest-ref",
            manifest.to_str().unwrap(),
            "--manifest-dist",
            manifest.to_str().unwrap(),
            "--out",
            out_csv.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.starts_with("frame,psnr_l,psnr_r,ssim_l"));
    let pooled = csv_row(&csv, "pooled");
    assert_eq!(pooled[1], "inf");
    assert_eq!(pooled[2], "inf");
    assert_eq!(pooled[3], "1.000000");
    assert_eq!(pooled[5], "1.000000");
    assert_eq!(pooled[7], "1.000000");

    let wide = write_corpus(
        dir.path(),
        "wide",
        &SynthParams {
            width: 384,
            height: 256,
            frames: 2,
            seed: 305,
            ..Default::default()
        },
    );
    let out2_csv = dir.path().join("mismatch.csv");
    let out = hv3d(
        &[
            "baselines",
            "--manifest-ref",
            manifest.to_str().unwrap(),
            "--manifest-dist",
            wide.to_str().unwrap(),
            "--out",
            out2_csv.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
    assert!(!out2_csv.exists());
}

#[test]
fn calibrate_recovers_generative_weights_from_feature_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("sequence,f_luma,f_chroma,f_cyclopean,f_depth,mos\n");
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for i in 0..12 {
        let f_luma = 0.2 + 1.8 * next();
        let f_chroma = 0.4 + 3.6 * next();
        let f_cy = 0.1 + 0.9 * next();
        let f_d = 0.1 + 0.9 * next();
        let mos = 0.2 * f_luma + 0.05 * f_chroma + 0.3 * f_cy + 0.1 * f_d;
        csv.push_str(&format!(
            "seq{i},{f_luma:.12},{f_chroma:.12},{f_cy:.12},{f_d:.12},{mos:.12}\n"
        ));
    }
    let csv_path = dir.path().join("features.csv");
    std::fs::write(&csv_path, &csv).unwrap();
    let weights_path = dir.path().join("weights.json");
    let out = hv3d(
        &[
            "calibrate",
            "--mos-csv",
            csv_path.to_str().unwrap(),
            "--out",
            weights_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("residual"), "{stdout}");

    let w = WeightVector::from_file(&weights_path).unwrap();
    assert!(w.calibrated);
    // The CSV carries 12 fractional digits, so recovery is bounded by the
    // input rounding, not the solver.
    assert!((w.w1 - 0.2).abs() < 1e-9, "{w:?}");
    assert!((w.w4 - 0.05).abs() < 1e-9);
    assert!((w.w2 - 0.3).abs() < 1e-9);
    assert!((w.w3 - 0.1).abs() < 1e-9);
}

#[test]
fn calibrate_rejects_underdetermined_input() {
    let dir = tempfile::tempdir().unwrap();
    let weights_path = dir.path().join("weights.json");

    let three_rows = "sequence,f_luma,f_chroma,f_cyclopean,f_depth,mos\n\
                      a,1.0,2.0,0.5,0.5,0.8\n\
                      b,1.5,2.5,0.6,0.4,0.9\n\
                      c,0.5,1.0,0.3,0.2,0.4\n";
    let csv_path = dir.path().join("short.csv");
    std::fs::write(&csv_path, three_rows).unwrap();
    let out = hv3d(
        &[
            "calibrate",
            "--mos-csv",
            csv_path.to_str().unwrap(),
            "--out",
            weights_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
    assert!(!weights_path.exists());

    // f_chroma = 2 * f_luma exactly: rank deficient.
    let mut dup = String::from("sequence,f_luma,f_chroma,f_cyclopean,f_depth,mos\n");
    for i in 0..6 {
        let l = 0.5 + 0.2 * i as f64;
        dup.push_str(&format!("s{i},{l},{},{},{},0.5\n", 2.0 * l, 0.1 * i as f64 + 0.2, 0.9 - 0.1 * i as f64));
    }
    let dup_path = dir.path().join("dup.csv");
    std::fs::write(&dup_path, &dup).unwrap();
    let out = hv3d(
        &[
            "calibrate",
            "--mos-csv",
            dup_path.to_str().unwrap(),
            "--out",
            weights_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
    assert!(stderr_of(&out).to_lowercase().contains("rank"));
    assert!(!weights_path.exists());
}

#[test]
fn calibrate_from_manifest_pairs_and_rescore() {
    let dir = tempfile::tempdir().unwrap();
    let params_a = SynthParams {
        width: 192,
        height: 192,
        frames: 1,
        seed: 306,
        texture_period: 16.0,
        contrast: 1.1,
        ..Default::default()
    };
    let params_b = SynthParams {
        width: 192,
        height: 192,
        frames: 1,
        seed: 307,
        texture_period: 48.0,
        contrast: 0.4,
        ..Default::default()
    };
    let ref_a = write_corpus(dir.path(), "base_a", &params_a);
    let ref_b = write_corpus(dir.path(), "base_b", &params_b);

    let mut pairs = String::from("ref_manifest,dist_manifest,mos\n");
    for (base_name, ref_path, seed) in [("a", &ref_a, 311u64), ("b", &ref_b, 312u64)] {
        for (li, level) in [0.5, 1.5, 4.0].iter().enumerate() {
            let dist_path = dir.path().join(format!("dist_{base_name}_{li}.json"));
            let out = hv3d(
                &[
                    "distort",
                    "--manifest-ref",
                    ref_path.to_str().unwrap(),
                    "--kind",
                    "dct_quantize",
                    "--level",
                    &level.to_string(),
                    "--seed",
                    &(seed + li as u64).to_string(),
                    "--out",
                    dist_path.to_str().unwrap(),
                ],
                &[],
            );
            assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
            let mos = 9.0 - 2.2 * li as f64 - if base_name == "a" { 0.3 } else { 0.0 };
            pairs.push_str(&format!(
                "{},{},{mos}\n",
                ref_path.file_name().unwrap().to_str().unwrap(),
                dist_path.file_name().unwrap().to_str().unwrap()
            ));
        }
    }
    let pairs_path = dir.path().join("pairs.csv");
    std::fs::write(&pairs_path, &pairs).unwrap();

    let weights_path = dir.path().join("fitted.json");
    let out = hv3d(
        &[
            "calibrate",
            "--mos-csv",
            pairs_path.to_str().unwrap(),
            "--mos-scale",
            "ten",
            "--out",
            weights_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
    let w = WeightVector::from_file(&weights_path).unwrap();
    assert!(w.calibrated);
    w.validate().unwrap();

    // Scoring with the fitted weights must not emit the uncalibrated note.
    let report_path = dir.path().join("rescore.csv");
    let out = hv3d(
        &[
            "score",
            "--manifest-ref",
            ref_a.to_str().unwrap(),
            "--manifest-dist",
            ref_a.to_str().unwrap(),
            "--weights",
            weights_path.to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
    assert!(!stderr_of(&out).contains("uncalibrated"));
    let csv = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(csv_row(&csv, "pooled")[6], "1.000000");
}

#[test]
fn evaluate_correlations_and_point_series() {
    let dir = tempfile::tempdir().unwrap();
    // hv3d equals mos; psnr is a noisy nonlinear monotone transform.
    let mut csv = String::from("sequence,psnr,hv3d,mos\n");
    for i in 0..12 {
        let mos = 0.15 + 0.07 * i as f64;
        let psnr = 20.0 + 30.0 * mos * mos;
        csv.push_str(&format!("s{i},{psnr:.6},{mos:.6},{mos:.6}\n"));
    }
    let csv_path = dir.path().join("scores.csv");
    std::fs::write(&csv_path, &csv).unwrap();
    let table_path = dir.path().join("table.csv");
    let out = hv3d(
        &[
            "evaluate",
            "--mos-csv",
            csv_path.to_str().unwrap(),
            "--out",
            table_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));

    let table = std::fs::read_to_string(&table_path).unwrap();
    assert!(table.starts_with("metric,scc,pcc_raw,pcc_fitted\n"));
    // Table 2 ordering: PSNR row before HV3D row; no VQM row unless given.
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("PSNR,"));
    assert!(lines[2].starts_with("HV3D,"));
    assert!(!table.contains("VQM"));

    let hv3d_row = csv_row(&table, "HV3D");
    assert_eq!(hv3d_row[1], "1.000000");
    assert_eq!(hv3d_row[2], "1.000000");
    let psnr_row = csv_row(&table, "PSNR");
    assert_eq!(psnr_row[1], "1.000000", "monotone data has SCC 1");
    let pcc_raw: f64 = psnr_row[2].parse().unwrap();
    let pcc_fitted: f64 = psnr_row[3].parse().unwrap();
    assert!(pcc_raw < 1.0);
    assert!(pcc_fitted >= pcc_raw - 1e-9, "{pcc_fitted} vs {pcc_raw}");

    let points = std::fs::read_to_string(dir.path().join("table_points.csv")).unwrap();
    assert!(points.starts_with("metric,sequence,score,mos,fitted_mos\n"));
    // One line per metric per sequence plus header.
    assert_eq!(points.lines().count(), 1 + 2 * 12);

    let bad_path = dir.path().join("bad.csv");
    std::fs::write(&bad_path, "sequence,bogus,mos\na,1,2\n").unwrap();
    let out = hv3d(
        &[
            "evaluate",
            "--mos-csv",
            bad_path.to_str().unwrap(),
            "--out",
            table_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
}

#[test]
fn evaluate_includes_vqm_only_when_supplied() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("sequence,psnr,ssim,vqm,vifp,msssim,hv3d,mos\n");
    for i in 0..8 {
        let mos = 0.2 + 0.09 * i as f64;
        csv.push_str(&format!(
            "s{i},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{mos:.4}\n",
            25.0 + 20.0 * mos,
            0.5 + 0.4 * mos,
            4.0 - 3.0 * mos,
            0.3 + 0.6 * mos,
            0.6 + 0.35 * mos,
            0.1 + 0.8 * mos
        ));
    }
    let csv_path = dir.path().join("scores.csv");
    std::fs::write(&csv_path, &csv).unwrap();
    let table_path = dir.path().join("table.csv");
    let out = hv3d(
        &[
            "evaluate",
            "--mos-csv",
            csv_path.to_str().unwrap(),
            "--out",
            table_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 0, "{}", stderr_of(&out));
    let table = std::fs::read_to_string(&table_path).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["PSNR", "SSIM", "VQM", "VIFp", "MS-SSIM", "HV3D"]);
    // VQM anti-correlates by construction.
    let vqm_scc: f64 = csv_row(&table, "VQM")[1].parse().unwrap();
    assert_eq!(vqm_scc, -1.0);
}

#[test]
fn distort_rejects_bad_kind_and_level() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(
        dir.path(),
        "ref",
        &SynthParams {
            width: 64,
            height: 64,
            frames: 1,
            seed: 308,
            ..Default::default()
        },
    );
    let out_path = dir.path().join("out.json");
    let out = hv3d(
        &[
            "distort",
            "--manifest-ref",
            manifest.to_str().unwrap(),
            "--kind",
            "salt_pepper",
            "--level",
            "1.0",
            "--out",
            out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
    assert!(!out_path.exists());

    let out = hv3d(
        &[
            "distort",
            "--manifest-ref",
            manifest.to_str().unwrap(),
            "--kind",
            "gaussian_noise",
            "--level",
            "0.0",
            "--out",
            out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_of(&out), 2, "{}", stderr_of(&out));
    assert!(!out_path.exists());
}
