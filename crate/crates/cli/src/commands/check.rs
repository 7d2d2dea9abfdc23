use anyhow::Result;
use missrate_core::marginal::{binomial_miss_lpmf, binomial_oracle_lpmf, marginal_oracle_lpmf};
use missrate_core::model::log_lik_simple;
use missrate_core::rng::{derive_stream, stream_rng};
use missrate_core::{
    CaseTable, CellInstance, DesignMatrices, Dims, Labels, LogDensity, ModelKind, Parameterization,
    PopulationTable, PosteriorTarget, PriorConfig,
};
use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::args::CheckArgs;
use crate::output::OutputDir;
use crate::ValidationFailed;

#[derive(Debug, Serialize)]
struct SuiteResult {
    name: &'static str,
    instances: usize,
    max_error: f64,
    tolerance: f64,
    passed: bool,
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1.0)
    }
}

/// Closed-form likelihood of the covariate-free model against enumeration
/// over allocations of the missing cases.
fn simple_likelihood(seed: u64, n: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in 0..n {
        let mut rng = stream_rng(seed, derive_stream(&[1, t as u64]));
        let j = rng.random_range(1..=4);
        let e: Vec<u64> = (0..j).map(|_| rng.random_range(1..2000)).collect();
        let x: Vec<u64> = (0..j).map(|_| rng.random_range(0..8)).collect();
        let m = rng.random_range(0..10);
        let lambda: Vec<f64> = (0..j).map(|_| rng.random_range(1e-4..0.02)).collect();
        let p: Vec<f64> = (0..j).map(|_| rng.random_range(0.05..0.95)).collect();
        let pop = PopulationTable::from_matrix(std::slice::from_ref(&e))?;
        let cases = CaseTable::from_matrix(std::slice::from_ref(&x), &[m])?;
        let closed = log_lik_simple(&pop, &cases, &lambda, &p)?;
        let oracle = marginal_oracle_lpmf(&CellInstance::new(e, x, m)?, &lambda, &p)?;
        worst = worst.max(rel_err(closed, oracle));
    }
    Ok(worst)
}

/// Dynamic-programming binomial-thinning marginal against enumeration.
fn binomial_recursion(seed: u64, n: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in 0..n {
        let mut rng = stream_rng(seed, derive_stream(&[2, t as u64]));
        let j = rng.random_range(1..=4);
        let e: Vec<u64> = (0..j).map(|_| rng.random_range(0..15)).collect();
        let x: Vec<u64> = e.iter().map(|&v| rng.random_range(0..=v.min(4))).collect();
        let m = rng.random_range(0..12);
        let theta: Vec<f64> = (0..j).map(|_| rng.random_range(0.01..0.99)).collect();
        let p: Vec<f64> = (0..j).map(|_| rng.random_range(0.01..0.99)).collect();
        let dp = binomial_miss_lpmf(&x, m, &p, &theta, &e)?;
        let oracle = binomial_oracle_lpmf(&x, m, &p, &theta, &e)?;
        if !(dp == f64::NEG_INFINITY && oracle == f64::NEG_INFINITY) {
            worst = worst.max(rel_err(dp, oracle));
        }
    }
    Ok(worst)
}

/// Analytic gradient of the hierarchical posterior against central
/// differences, in both parameterisations.
fn posterior_gradient(seed: u64, n: usize) -> Result<f64> {
    let dims = Dims::new(4, 2, 2);
    let mut worst: f64 = 0.0;
    for t in 0..n {
        let mut rng = stream_rng(seed, derive_stream(&[3, t as u64]));
        let counts: Vec<u64> = (0..dims.n_cells()).map(|_| rng.random_range(100..2000)).collect();
        let pop = PopulationTable::new(Labels::numbered(dims), counts)?;
        let observed: Vec<u64> = (0..dims.n_cells()).map(|_| rng.random_range(0..15)).collect();
        let missing: Vec<u64> = (0..dims.n_rows()).map(|_| rng.random_range(0..6)).collect();
        let cases = CaseTable::new(dims, observed, missing)?;
        let z = DMatrix::from_fn(dims.strata, 1, |_, _| rng.random_range(-1.0..1.0));
        let design = DesignMatrices::with_z(z, dims.geos)?;
        let param = if t % 2 == 0 {
            Parameterization::CENTERED
        } else {
            Parameterization::OBSERVATION_NON_CENTERED
        };
        let target = PosteriorTarget::new(&pop, &cases, &design, &PriorConfig::simulation(2, 1), ModelKind::Joint)?
            .with_parameterization(param);
        let mut theta: Vec<f64> = (0..target.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for g in 0..dims.geos {
            let o = target.layout().geo_offset(g, missrate_core::Block::Lambda);
            theta[o] -= 4.0;
            theta[o + 1] -= 4.0;
        }
        let mut grad = vec![0.0; target.dim()];
        target.log_density_grad(&theta, &mut grad)?;
        let h = 1e-5;
        for k in 0..theta.len() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (target.log_density(&up)? - target.log_density(&dn)?) / (2.0 * h);
            worst = worst.max(rel_err(grad[k], fd));
        }
    }
    Ok(worst)
}

/// A suite returns the worst relative error over `n` instances from `seed`.
type Suite = fn(u64, usize) -> Result<f64>;

pub fn run(args: &CheckArgs) -> Result<()> {
    let n = args.replicates.max(1);
    let suites: [(&'static str, Suite, f64, usize); 3] = [
        ("simple-likelihood-vs-enumeration", simple_likelihood, 1e-10, n),
        ("binomial-recursion-vs-enumeration", binomial_recursion, 1e-10, n),
        ("posterior-gradient-vs-differences", posterior_gradient, 1e-5, n.div_ceil(10)),
    ];
    let mut results = Vec::new();
    for (name, f, tol, count) in suites {
        let max_error = f(args.seed, count)?;
        let passed = max_error <= tol;
        println!(
            "{:<36} {:>5} instances  max error {:.2e}  (tol {:.0e})  {}",
            name,
            count,
            max_error,
            tol,
            if passed { "PASS" } else { "FAIL" }
        );
        results.push(SuiteResult {
            name,
            instances: count,
            max_error,
            tolerance: tol,
            passed,
        });
    }
    if let Some(dir) = &args.out {
        let mut out = OutputDir::create(dir, "check", serde_json::json!({ "args": args }), args.seed)?;
        out.write_json("check.json", &results)?;
        out.finish()?;
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(ValidationFailed(format!("failed checks: {}", failed.join(", "))).into())
    }
}
