use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mirror_depth::imaging::{border_band, BandMetric};
use mirror_depth::metrics::{eval_depth, ssim, EvalOptions, SsimMode};
use mirror_depth::plane_fit::{ransac_plane, RansacConfig};
use mirror_depth::refine::{fit_instance_plane, refine_depth, FitConfig};
use mirror_depth::synth::{corrupt, render_gt};
use mirror_depth_bench::{band_points, frame};

fn ransac(c: &mut Criterion) {
    let f = frame(3);
    let points = band_points(&f);
    let mut group = c.benchmark_group("ransac");
    for iterations in [100, 1000] {
        let cfg = RansacConfig {
            iterations,
            ..RansacConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(iterations), &cfg, |b, cfg| {
            b.iter(|| ransac_plane(black_box(&points), cfg).unwrap())
        });
    }
    group.finish();
}

fn band(c: &mut Criterion) {
    let f = frame(3);
    let mut group = c.benchmark_group("border_band");
    for width in [5u32, 25, 60] {
        group.bench_with_input(BenchmarkId::from_parameter(width), &width, |b, &w| {
            b.iter(|| border_band(black_box(&f.scene.mask), w, BandMetric::Euclidean).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let f = frame(4);
    let all = vec![true; f.depth.len()];
    c.bench_function("ssim/gaussian", |b| {
        b.iter(|| ssim(&f.depth, &f.scene.gt, black_box(&all), SsimMode::Gaussian).unwrap())
    });
    c.bench_function("eval_depth", |b| {
        b.iter(|| eval_depth(&f.depth, &f.scene.gt, &f.scene.mask, &EvalOptions::default()).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let f = frame(5);
    let cfg = FitConfig::default();
    c.bench_function("fit_instance_plane", |b| {
        b.iter(|| fit_instance_plane(black_box(&f.depth), &f.scene.mask, None, &f.spec.intrinsics, &cfg).unwrap())
    });
    c.bench_function("refine_depth", |b| {
        b.iter(|| refine_depth(black_box(&f.depth), &f.scene.mask, &f.scene.plane, &f.spec.intrinsics).unwrap())
    });
    c.bench_function("synth/render_and_corrupt", |b| {
        b.iter(|| {
            let scene = render_gt(black_box(&f.spec)).unwrap();
            corrupt(&scene, &f.spec).unwrap()
        })
    });
}

criterion_group!(benches, ransac, band, metrics, pipeline);
criterion_main!(benches);
