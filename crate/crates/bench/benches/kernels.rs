use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gamerep_bench::{blobs, random_images, unit_rows};
use gamerep_core::dataset::Image;
use gamerep_core::eval::{silhouette, tsne, TsneConfig};
use gamerep_core::losses::contrastive_grad;
use gamerep_core::model::{encode, init_params, ModelConfig};
use gamerep_core::training::{contrastive_objective, supervised_objective};

fn encoder(c: &mut Criterion) {
    let params = init_params(&ModelConfig::desk([32, 32], 6), 0).unwrap();
    let images = random_images(64, 32, 1);
    let refs: Vec<&Image> = images.iter().collect();
    let labels: Vec<usize> = (0..64).map(|i| i % 6).collect();
    c.bench_function("encode_64x32x32", |b| b.iter(|| encode(&params, black_box(&refs)).unwrap()));
    c.bench_function("supervised_step_64", |b| {
        b.iter(|| supervised_objective(&params, black_box(&refs), &labels, Some(3)).unwrap())
    });
    c.bench_function("contrastive_step_64", |b| {
        b.iter(|| contrastive_objective(&params, black_box(&refs), &labels, 1.0).unwrap())
    });
}

fn losses(c: &mut Criterion) {
    let z = unit_rows(64, 128, 2);
    let labels: Vec<usize> = (0..64).map(|i| i % 6).collect();
    c.bench_function("contrastive_grad_64x128", |b| b.iter(|| contrastive_grad(black_box(&z), &labels, 1.0).unwrap()));
}

fn metrics(c: &mut Criterion) {
    let (points, labels) = blobs(6, 200, 64, 3);
    c.bench_function("silhouette_1200x64", |b| b.iter(|| silhouette(black_box(&points), &labels).unwrap()));
    let (small, _) = blobs(5, 60, 64, 4);
    let cfg = TsneConfig { iterations: 100, ..TsneConfig::default() };
    let mut group = c.benchmark_group("tsne");
    group.sample_size(10);
    group.bench_function("tsne_300x64_100iter", |b| b.iter(|| tsne(black_box(&small), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, encoder, losses, metrics);
criterion_main!(benches);
