use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entropylab::constructions::{simplex_lattice, sumset, Sign};
use entropylab::engine::{builtin, evaluate_discrete, search_violation, SearchConfig};
use entropylab::{par, Exec, LatticePmf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn search(c: &mut Criterion) {
    let spec = builtin::sum_difference();
    let mut group = c.benchmark_group("search_violation");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = SearchConfig { seed: 1, restarts: 16, iterations: 60, exec, ..SearchConfig::default() };
        group.bench_function(name, |b| b.iter(|| search_violation(black_box(&spec), &config).unwrap()));
    }
    group.finish();
}

fn sumsets(c: &mut Criterion) {
    let mut group = c.benchmark_group("simplex_difference_set");
    group.sample_size(10);
    for (n, l) in [(2usize, 96u32), (3, 24)] {
        let a = simplex_lattice(n, l).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("n{n}_L{l}")), &a, |b, a| {
                b.iter(|| sumset(a, a, Sign::Minus, exec).unwrap().len())
            });
        }
    }
    group.finish();
}

fn random_pmf(rng: &mut ChaCha8Rng) -> LatticePmf {
    let n = rng.random_range(1..=8);
    LatticePmf::from_weights(1, (0..n).map(|_| (vec![rng.random_range(-12..=12)], rng.random::<f64>() + 1e-3))).unwrap()
}

fn trial_suite(c: &mut Criterion) {
    let spec = builtin::sum_difference();
    let mut group = c.benchmark_group("random_trials");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                par::map_range(exec, 256, |i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
                    let laws = BTreeMap::from([("X".to_string(), random_pmf(&mut rng)), ("Y".to_string(), random_pmf(&mut rng))]);
                    evaluate_discrete(&spec, &laws).unwrap().slack
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, search, sumsets, trial_suite);
criterion_main!(benches);
