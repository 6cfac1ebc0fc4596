use brwlab::engine::{Brw, PrunePolicy, Target};
use brwlab::RandomStream;
use brwlab_bench::gaussian_binary;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn unpruned_generations(c: &mut Criterion) {
    let (inc, off) = gaussian_binary(1);
    let brw = Brw::new(&inc, &off, PrunePolicy::off(), vec![1.0]).unwrap();
    let mut group = c.benchmark_group("unpruned");
    for n in [10u32, 14] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut rep = 0u64;
            b.iter(|| {
                rep += 1;
                brw.run_generations(n, &mut RandomStream::derive(1, &[rep])).unwrap()
            })
        });
    }
    group.finish();
}

fn pruned_first_passage(c: &mut Criterion) {
    let (inc, off) = gaussian_binary(2);
    let mut group = c.benchmark_group("frontier_first_passage");
    group.sample_size(10);
    for capacity in [2_000usize, 20_000] {
        let brw = Brw::new(&inc, &off, PrunePolicy::frontier((2.0 * 2f64.ln()).sqrt(), capacity), vec![1.0, 0.0]).unwrap();
        let target = Target::on_axis(2, 30.0);
        group.bench_with_input(BenchmarkId::from_parameter(capacity), &capacity, |b, _| {
            let mut rep = 0u64;
            b.iter(|| {
                rep += 1;
                brw.run_first_passage(&target, 200, &mut RandomStream::derive(2, &[rep])).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, unpruned_generations, pruned_first_passage);
criterion_main!(benches);
