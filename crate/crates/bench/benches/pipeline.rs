use std::hint::black_box;

use bodyaudit_core::eval::fid;
use bodyaudit_core::{scenegen, BBox, Embedding, ImageRef, Pipeline};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn geometry(c: &mut Criterion) {
    let a = BBox::new(10, 20, 210, 180).unwrap();
    let b = BBox::new(90, 60, 300, 240).unwrap();
    c.bench_function("bbox_iou", |bench| {
        bench.iter(|| black_box(&a).iou(black_box(&b)))
    });
}

fn embeddings(n: usize, dim: usize, shift: f64) -> Vec<Embedding> {
    (0..n)
        .map(|i| {
            Embedding::new(
                (0..dim)
                    .map(|j| ((i * 31 + j * 17) % 97) as f64 / 97.0 + shift)
                    .collect(),
            )
            .unwrap()
        })
        .collect()
}

fn frechet(c: &mut Criterion) {
    let a = embeddings(256, 64, 0.0);
    let b = embeddings(256, 64, 0.25);
    c.bench_function("fid_256x64", |bench| {
        bench.iter(|| fid(black_box(&a), black_box(&b)).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let p = Pipeline::mock();
    let scenes: Vec<ImageRef> = (0..16)
        .map(|s| ImageRef::from_scene(format!("s{s}"), scenegen::generate(s)))
        .collect();
    c.bench_function("detect_16_scenes", |bench| {
        bench.iter(|| {
            for s in &scenes {
                black_box(p.detect(s).unwrap());
            }
        })
    });
    c.bench_function("run_one_scene", |bench| {
        bench.iter_batched(
            || ImageRef::from_scene("s", scenegen::generate(3)),
            |img| p.run(&img).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, geometry, frechet, pipeline);
criterion_main!(benches);
