use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use panospa::{ospa_ps_dataset, solve_assignment, ClassFilter, CostMatrix, Mask};
use panospa_bench::scene;

fn rle_iou(c: &mut Criterion) {
    let a = Mask::from_rect(480, 640, 100, 100, 300, 400);
    let b = Mask::from_rect(480, 640, 150, 200, 350, 500);
    c.bench_function("rle_iou_480x640", |bench| bench.iter(|| black_box(&a).iou(black_box(&b)).unwrap()));
}

fn assignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("hungarian");
    for n in [10usize, 40, 80] {
        // deterministic pseudo-random costs in [0, 1)
        let mut state = 0x9e3779b97f4a7c15u64;
        let costs = CostMatrix::from_fn(n, n, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &costs, |bench, costs| {
            bench.iter(|| solve_assignment(costs).unwrap())
        });
    }
    group.finish();
}

fn ospa_dataset(c: &mut Criterion) {
    let (taxonomy, gt, pred) = scene(20, 80, 1);
    c.bench_function("ospa_ps_20_frames_80_masks", |bench| {
        bench.iter(|| ospa_ps_dataset(&gt.frames, &pred.frames, &taxonomy, ClassFilter::ALL).unwrap())
    });
}

criterion_group!(benches, rle_iou, assignment, ospa_dataset);
criterion_main!(benches);
