use anyhow::{Context, Result};
use missrate_core::estimators::{approx_posterior_lambda1, estimate_lambda};
use missrate_core::io::load_cases_csv;
use missrate_core::{ApproxPosterior, SimpleEstimates};
use serde::Serialize;

use crate::args::EstimateArgs;
use crate::inputs;
use crate::output::OutputDir;

#[derive(Debug, Serialize)]
struct SweepPoint {
    prior_rate: f64,
    beta1: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    posterior: Option<ApproxPosterior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct EstimateFile {
    categories: Vec<String>,
    estimates: SimpleEstimates,
    /// Approximate posterior of the first category's rate over prior rates;
    /// only for two categories with a positive estimate of the second
    /// category's missing rate.
    sweep: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_skipped: Option<String>,
}

pub fn run(args: &EstimateArgs) -> Result<()> {
    let pop = inputs::population(&args.pop)?;
    let cases = load_cases_csv(&args.cases, &pop).with_context(|| format!("reading cases {}", args.cases.display()))?;
    let config = serde_json::json!({ "args": args, "labels": pop.labels() });
    let mut out = OutputDir::create(&args.out, "estimate", config, 0)?;
    let (pop, cases) = (pop.flatten_geos(), cases.flatten_geos());
    let estimates = estimate_lambda(&pop, &cases)?;

    let mut sweep = Vec::new();
    let skipped = if pop.dims().categories != 2 {
        Some("the approximate posterior needs exactly two categories".to_string())
    } else if estimates.u_hat[1].is_nan() || estimates.u_hat[1] <= 0.0 {
        Some(format!("estimated missing rate of the second category is {}", estimates.u_hat[1]))
    } else {
        for &r1 in &args.rates {
            for beta1 in [1u8, 2] {
                let res = approx_posterior_lambda1(&pop, &cases, estimates.u_hat[1], r1, args.alpha1, beta1);
                sweep.push(SweepPoint {
                    prior_rate: r1,
                    beta1,
                    error: res.as_ref().err().map(ToString::to_string),
                    posterior: res.ok(),
                });
            }
        }
        None
    };

    let cats = pop.labels().categories.clone();
    println!("{:<16} {:>12} {:>12} {:>12} {:>10}", "category", "v_hat", "u_hat", "lambda_hat", "p_hat");
    for (j, c) in cats.iter().enumerate() {
        println!(
            "{:<16} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.4}",
            c, estimates.v_hat[j], estimates.u_hat[j], estimates.lambda_hat[j], estimates.p_hat[j]
        );
    }
    for s in &sweep {
        if let Some(p) = &s.posterior {
            println!(
                "r1 {:>8} beta1 {}: mean {:.4e} sd {:.3e} z {:.3}",
                s.prior_rate,
                s.beta1,
                p.mean,
                p.variance.sqrt(),
                p.z
            );
        }
    }
    if let Some(why) = &skipped {
        println!("approximate posterior sweep skipped: {why}");
    }
    out.write_json(
        "estimates.json",
        &EstimateFile {
            categories: cats,
            estimates,
            sweep,
            sweep_skipped: skipped,
        },
    )?;
    out.finish()
}
