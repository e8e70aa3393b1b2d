use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mrws_core::calculus::coarea_integral;
use mrws_core::least_gradient::{solve_bruteforce, solve_exact, TieBreak};
use mrws_core::random::{random_graph_space, random_instance, GraphParams};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let auto = rayon::ThreadPoolBuilder::new().build().unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("sequential", single), ("parallel", auto)]
}

fn coarea(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rws = random_graph_space(&mut rng, &GraphParams::new(400)).unwrap();
    let u: Vec<f64> = (0..rws.len()).map(|i| ((i * 37) % 101) as f64).collect();
    let mut group = c.benchmark_group("coarea_400");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| coarea_integral(&rws, &u)))
        });
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let problem = random_instance(&mut rng, 200, 150, 0).unwrap();
    let mut group = c.benchmark_group("solve_exact_200");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| solve_exact(&problem, TieBreak::Minimal).unwrap()))
        });
    }
    group.finish();
}

fn brute(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let problem = random_instance(&mut rng, 12, 6, 6).unwrap();
    let mut group = c.benchmark_group("bruteforce_6");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| solve_bruteforce(&problem, None).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, coarea, exact, brute);
criterion_main!(benches);
