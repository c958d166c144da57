use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xmimo::graphsic::{build_graph, peel_detect};
use xmimo::lindet::{detect_dldf, detect_dldf_parallel, detect_zf, ZfMode};
use xmimo::{SicOptions, SystemConfig};
use xmimo_bench::scenario;

fn by_subarrays(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect");
    for b in [8usize, 16, 32] {
        let s = scenario(SystemConfig { antennas: 512, users: 16, subarrays: b, ..Default::default() }, 1);
        let (h, y, p, rho) = (&s.channel.h, &s.y, &s.partition, s.config.rho());
        group.bench_with_input(BenchmarkId::new("zf", b), &b, |bn, _| bn.iter(|| detect_zf(black_box(h), y, rho, &mut ()).unwrap()));
        group.bench_with_input(BenchmarkId::new("dldf", b), &b, |bn, _| {
            bn.iter(|| detect_dldf(black_box(h), y, p, rho, &mut ()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dldf-parallel", b), &b, |bn, _| {
            bn.iter(|| detect_dldf_parallel(black_box(h), y, p, rho, ZfMode::Batch).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("graph-sic", b), &b, |bn, _| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            bn.iter(|| {
                let g = build_graph(black_box(h), p, s.config.p0, &mut ()).unwrap();
                peel_detect(&g, h, y, p, rho, &mut rng, SicOptions::default(), &mut ()).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, by_subarrays);
criterion_main!(benches);
