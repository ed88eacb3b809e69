use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use toolpose_bench::{boxes, scene};
use toolpose_core::pose3d::{track_from_boxes, PoseOptions};
use toolpose_core::synth::{generate, Preset, SceneSetup};
use toolpose_core::track_sequence_2d;

fn pose_stage(c: &mut Criterion) {
    let (bx, cfg) = boxes(1270, 127);
    let opts = PoseOptions::from_config(&cfg);
    c.bench_function("pose_stage_1270_frames", |b| {
        b.iter_batched(
            || bx.clone(),
            |input| track_from_boxes(input, &cfg.camera, &opts).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn extraction(c: &mut Criterion) {
    let (fr, cfg) = scene(32, 2);
    let mut g = c.benchmark_group("extract_2d");
    g.sample_size(20);
    g.bench_function("32_frames_640x480", |b| {
        b.iter(|| track_sequence_2d(black_box(&fr), &cfg, cfg.tracker.box_mode))
    });
    g.finish();
}

fn render(c: &mut Criterion) {
    let setup = SceneSetup::default();
    let script = setup.preset(Preset::Combined { seed: 3 }, 8).unwrap();
    let mut g = c.benchmark_group("synth");
    g.sample_size(10);
    g.bench_function("render_8_frames", |b| {
        b.iter(|| generate(black_box(&script), &setup.camera, setup.width, setup.height).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pose_stage, extraction, render);
criterion_main!(benches);
