use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use srhar_bench::{first_batch, model, random_bundle, random_tensor, random_waveform};
use srhar_core::adversary::{step_disc, step_main, step_plain};
use srhar_core::data::augment_downsample;
use srhar_core::grad::ops;
use srhar_core::models::{hcf_extract, Arch};
use srhar_core::sigproc::{interpolate_to_length, resample, FRAME_LEN};

fn conv_and_dense(c: &mut Criterion) {
    let x = random_tensor(&[64, 16, 256], 1);
    let w = random_tensor(&[16, 16, 3], 2);
    let b = random_tensor(&[16], 3);
    c.bench_function("conv1d 64x16x256 k3", |bench| {
        bench.iter(|| ops::conv1d(black_box(&x), &w, &b, 1).unwrap())
    });
    let h = random_tensor(&[64, 2048], 4);
    let wd = random_tensor(&[1024, 2048], 5);
    let bd = random_tensor(&[1024], 6);
    c.bench_function("dense 64x2048 -> 1024", |bench| {
        bench.iter(|| ops::dense(black_box(&h), &wd, &bd).unwrap())
    });
}

fn signal(c: &mut Criterion) {
    let frame = random_waveform(100.0, FRAME_LEN, 7);
    for rate in [50.0, 6.25, 33.3] {
        c.bench_function(&format!("resample frame to {rate} Hz and back"), |bench| {
            bench.iter(|| {
                interpolate_to_length(&resample(black_box(&frame), rate).unwrap(), FRAME_LEN)
                    .unwrap()
            })
        });
    }
    let bundle = random_bundle(50, 8);
    c.bench_function("augment 50 frames", |bench| {
        bench.iter(|| augment_downsample(black_box(&bundle)).unwrap())
    });
    let f = &bundle.frames()[0];
    c.bench_function("hcf_extract", |bench| {
        bench.iter(|| hcf_extract(black_box(f)))
    });
}

fn train_steps(c: &mut Criterion) {
    let bundle = random_bundle(64, 9);
    let batch = first_batch(&bundle, 64);
    let mut group = c.benchmark_group("vgg-mini step, batch 64");
    group.sample_size(10);
    let mut m = model(Arch::VggMini);
    group.bench_function("step_plain", |bench| {
        bench.iter(|| step_plain(&mut m, &batch, 0).unwrap())
    });
    let mut m = model(Arch::VggMini);
    group.bench_function("step_main", |bench| {
        bench.iter(|| step_main(&mut m, &batch, 1.0, 0).unwrap())
    });
    let mut m = model(Arch::VggMini);
    group.bench_function("step_disc", |bench| {
        bench.iter(|| step_disc(&mut m, &batch, 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, conv_and_dense, signal, train_steps);
criterion_main!(benches);
