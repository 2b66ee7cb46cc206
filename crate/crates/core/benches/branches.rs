use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use laqcc::clifford::{embed_input, flatten_grid, flatten_ladder, random_grid, random_ladder, seeded_product_state};
use laqcc::macros::Backend;
use laqcc::program::{explore, explore_from, BranchMode, ExploreOptions};
use laqcc::stateprep::{ghz_state, w_state};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exhaustive(c: &mut Criterion) {
    let mut g = c.benchmark_group("exhaustive");
    g.sample_size(10);
    for n in [6, 8] {
        let p = ghz_state(n).unwrap();
        for parallel in [true, false] {
            let opts = ExploreOptions { merge: false, parallel, ..ExploreOptions::default() };
            let id = BenchmarkId::new(if parallel { "ghz/parallel" } else { "ghz/sequential" }, n);
            g.bench_with_input(id, &p.program, |b, prog| b.iter(|| explore(black_box(prog), &opts).unwrap()));
        }
    }
    let p = w_state(4, Backend::Gadget).unwrap();
    for parallel in [true, false] {
        let opts = ExploreOptions { parallel, ..ExploreOptions::default() };
        let id = BenchmarkId::new(if parallel { "w/parallel" } else { "w/sequential" }, 4);
        g.bench_with_input(id, &p.program, |b, prog| b.iter(|| explore(black_box(prog), &opts).unwrap()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ladder = random_ladder(&mut rng, 5, 3).unwrap();
    let flat = flatten_ladder(&ladder).unwrap();
    let init = embed_input(&flat, &seeded_product_state(5, 1).unwrap()).unwrap();
    for parallel in [true, false] {
        let opts = ExploreOptions { merge: false, parallel, ..ExploreOptions::default() };
        let id = BenchmarkId::new(if parallel { "ladder/parallel" } else { "ladder/sequential" }, 5);
        g.bench_with_input(id, &init, |b, init| {
            b.iter(|| explore_from(&flat.program, black_box(init.clone()), &opts).unwrap())
        });
    }
    g.finish();
}

fn sampled(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampled");
    g.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = random_grid(&mut rng, 3, 3, 2).unwrap();
    let flat = flatten_grid(&grid).unwrap();
    let init = embed_input(&flat, &seeded_product_state(3, 2).unwrap()).unwrap();
    for parallel in [true, false] {
        let opts = ExploreOptions {
            mode: BranchMode::Sample { count: 32, seed: 5 },
            merge: false,
            parallel,
            ..ExploreOptions::default()
        };
        let id = BenchmarkId::new(if parallel { "grid/parallel" } else { "grid/sequential" }, 32);
        g.bench_with_input(id, &init, |b, init| {
            b.iter(|| explore_from(&flat.program, black_box(init.clone()), &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, exhaustive, sampled);
criterion_main!(benches);
