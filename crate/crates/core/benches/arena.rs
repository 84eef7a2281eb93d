use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tsogame::arena::{build_arena, GameSpec, UpdatePolicy};
use tsogame::game::solve;
use tsogame::program::parse_program;

const SCALE: &str = include_str!("../../../samples/scale.tso");

fn spec(bound: usize, parallel: bool) -> GameSpec {
    let p = parse_program(SCALE).unwrap();
    let mut s = GameSpec::new(p, UpdatePolicy::Always, UpdatePolicy::Always).with_bound(bound);
    s.parallel = parallel;
    s
}

fn arena(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_arena");
    g.sample_size(10);
    for bound in [3, 5, 6] {
        let n = build_arena(&spec(bound, false)).unwrap().game.num_nodes();
        for (name, parallel) in [("sequential", false), ("parallel", true)] {
            if parallel && !tsogame::par::AVAILABLE {
                continue;
            }
            let s = spec(bound, parallel);
            g.bench_with_input(BenchmarkId::new(name, format!("k{bound}/{n}n")), &s, |b, s| {
                b.iter(|| build_arena(s).unwrap())
            });
        }
    }
    g.finish();

    let a = build_arena(&spec(6, false)).unwrap();
    c.bench_function("solve/k6", |b| b.iter(|| solve(&a.game)));
}

criterion_group!(benches, arena);
criterion_main!(benches);
