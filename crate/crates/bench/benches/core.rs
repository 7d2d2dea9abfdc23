use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use missrate_bench::{desk_problem, random_point};
use missrate_core::marginal::binomial_miss_lpmf;
use missrate_core::model::log_lik_simple;
use missrate_core::{
    sample_posterior, Block, CaseTable, LogDensity, ModelKind, Parameterization, PopulationTable,
    PosteriorTarget, PriorConfig, Result, SamplerConfig,
};

fn gradient(c: &mut Criterion) {
    let (pop, cases, design) = desk_problem();
    let d = pop.dims();
    let prior = PriorConfig::simulation(d.categories, design.k());
    for (name, param) in [
        ("centered", Parameterization::CENTERED),
        ("observation-non-centered", Parameterization::OBSERVATION_NON_CENTERED),
    ] {
        let target = PosteriorTarget::new(&pop, &cases, &design, &prior, ModelKind::Joint)
            .unwrap()
            .with_parameterization(param);
        let mut theta = random_point(target.dim(), 1);
        for g in 0..d.geos {
            let o = target.layout().geo_offset(g, Block::Lambda);
            theta[o..o + d.categories].iter_mut().for_each(|v| *v -= 5.0);
        }
        let mut grad = vec![0.0; target.dim()];
        c.bench_function(&format!("joint log density + gradient ({name})"), |b| {
            b.iter(|| target.log_density_grad(black_box(&theta), &mut grad).unwrap())
        });
    }
}

fn marginals(c: &mut Criterion) {
    let e = [220, 180, 400, 90];
    let x = [3, 1, 6, 0];
    let p = [0.7, 0.8, 0.9, 0.6];
    let theta = [0.02, 0.03, 0.015, 0.05];
    c.bench_function("binomial recursion J=4 m=20", |b| {
        b.iter(|| binomial_miss_lpmf(black_box(&x), 20, &p, &theta, &e).unwrap())
    });
    let rows: Vec<Vec<u64>> = (0..18).map(|i| vec![1000 + 50 * i, 20_000, 3000, 40_000]).collect();
    let pop = PopulationTable::from_matrix(&rows).unwrap();
    let cases = CaseTable::from_matrix(&vec![vec![3, 40, 5, 80]; 18], &[12; 18]).unwrap();
    let lambda = [0.004, 0.003, 0.002, 0.0025];
    c.bench_function("closed-form likelihood I=18 J=4", |b| {
        b.iter(|| log_lik_simple(&pop, &cases, black_box(&lambda), &p).unwrap())
    });
}

struct StdNormal(usize);

impl LogDensity for StdNormal {
    fn dim(&self) -> usize {
        self.0
    }

    fn log_density_grad(&self, q: &[f64], grad: &mut [f64]) -> Result<f64> {
        for (g, x) in grad.iter_mut().zip(q) {
            *g = -x;
        }
        Ok(-0.5 * q.iter().map(|x| x * x).sum::<f64>())
    }
}

fn nuts(c: &mut Criterion) {
    let target = StdNormal(20);
    let names: Vec<String> = (0..20).map(|k| format!("x{k}")).collect();
    let config = SamplerConfig {
        chains: 1,
        warmup: 200,
        draws: 200,
        ..SamplerConfig::default()
    };
    let mut group = c.benchmark_group("nuts");
    group.sample_size(10);
    group.bench_function("20-d standard normal, 200 + 200", |b| {
        b.iter(|| sample_posterior(&target, &config, names.clone()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, gradient, marginals, nuts);
criterion_main!(benches);
