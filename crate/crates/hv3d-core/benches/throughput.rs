//! Throughput comparison of the scoring pipeline and its kernels, with
//! frame-parallel execution against a sequential per-frame loop.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use hv3d_core::cyclopean::{fused_similarity, match_blocks, CyclopeanParams};
use hv3d_core::distort::{apply_distortion, DistortionKind, DistortionSpec};
use hv3d_core::metrics_2d::{ms_ssim, vif, SsimParams, VifParams};
use hv3d_core::score::{score_components, sequence_components};
use hv3d_core::synth::{synthesize_sequence, SynthParams};
use hv3d_core::transform::DctBasis;
use hv3d_core::video_io::StereoSequence;

fn corpus(frames: usize) -> (StereoSequence, StereoSequence) {
    let reference = synthesize_sequence(&SynthParams {
        width: 320,
        height: 192,
        frames,
        seed: 1,
        ..Default::default()
    })
    .expect("synthesis");
    let distorted = apply_distortion(
        &reference,
        &DistortionSpec {
            kind: DistortionKind::DctQuantize,
            level: 2.0,
            seed: 2,
        },
    )
    .expect("distortion");
    (reference, distorted)
}

fn bench_sequence(c: &mut Criterion) {
    let (reference, distorted) = corpus(4);
    let params = CyclopeanParams::default();

    let mut group = c.benchmark_group("sequence_4_frames");
    group.sample_size(10);
    group.bench_function("frame_parallel", |b| {
        b.iter(|| {
            sequence_components(black_box(&reference), black_box(&distorted), &params).unwrap()
        })
    });
    group.bench_function("sequential_loop", |b| {
        b.iter(|| {
            (0..reference.frame_count)
                .map(|i| {
                    score_components(
                        black_box(reference.view(i)),
                        black_box(distorted.view(i)),
                        &params,
                    )
                    .unwrap()
                })
                .collect::<Vec<_>>()
        })
    });
    group.finish();
}

fn bench_kernels(c: &mut Criterion) {
    let (reference, distorted) = corpus(1);
    let ref_y = &reference.left[0].y;
    let dist_y = &distorted.left[0].y;
    let params = CyclopeanParams::default();

    let mut group = c.benchmark_group("kernels_320x192");
    group.sample_size(10);
    group.bench_function("vif_luma", |b| {
        b.iter(|| vif(black_box(ref_y), black_box(dist_y), &VifParams::default()).unwrap())
    });
    group.bench_function("ms_ssim_luma", |b| {
        b.iter(|| ms_ssim(black_box(ref_y), black_box(dist_y), &SsimParams::default()).unwrap())
    });
    group.bench_function("match_blocks", |b| {
        b.iter(|| {
            match_blocks(
                black_box(&reference.left[0].y),
                black_box(&reference.right[0].y),
                64,
            )
            .unwrap()
        })
    });
    group.bench_function("fused_similarity", |b| {
        b.iter(|| {
            fused_similarity(
                black_box(&reference.left[0]),
                black_box(&reference.right[0]),
                black_box(&distorted.left[0]),
                black_box(&distorted.right[0]),
                &params,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_transform(c: &mut Criterion) {
    let basis = DctBasis::dct16();
    let block: Vec<f64> = (0..256).map(|i| f64::from((i * 37 + 11) % 256)).collect();

    let mut group = c.benchmark_group("dct_16x16");
    group.bench_function("roundtrip", |b| {
        b.iter(|| basis.idct2(&basis.dct2(black_box(&block))))
    });
    group.finish();
}

criterion_group!(benches, bench_sequence, bench_kernels, bench_transform);
criterion_main!(benches);
