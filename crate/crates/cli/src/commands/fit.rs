use std::fmt::Write as _;

use anyhow::{Context, Result};
use missrate_core::inference::Diagnostics;
use missrate_core::io::{load_cases_csv, write_draws_csv};
use missrate_core::study::{
    estimand_draws, run_method, summarize_estimands, EstimandSummary, Method, MethodResult, MiSettings,
};
use missrate_core::{PriorConfig, SamplerConfig};

use crate::args::FitArgs;
use crate::inputs;
use crate::output::OutputDir;

pub fn summary_text(method: Method, summaries: &[EstimandSummary]) -> String {
    let mut s = format!("method: {}\n", method.name());
    let _ = writeln!(
        s,
        "{:<22} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "estimand", "mean", "sd", "q10", "q25", "q75", "q90"
    );
    for e in summaries {
        let _ = writeln!(
            s,
            "{:<22} {:>12.5e} {:>12.4e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}",
            e.name,
            e.mean,
            e.variance.sqrt(),
            e.q10,
            e.q25,
            e.q75,
            e.q90
        );
    }
    s
}

pub fn run(args: &FitArgs) -> Result<()> {
    let pop = inputs::population(&args.pop)?;
    let cases = load_cases_csv(&args.cases, &pop).with_context(|| format!("reading cases {}", args.cases.display()))?;
    let design = inputs::design(&pop, args.design.as_deref())?;
    let method = Method::parse(&args.method)?;
    let sampler = SamplerConfig {
        chains: args.sampler.chains,
        warmup: args.sampler.warmup,
        draws: args.sampler.draws,
        target_accept: args.sampler.target_accept,
        seed: args.sampler.seed,
        ..SamplerConfig::default()
    };
    sampler.validate()?;
    let (j, k) = (pop.dims().categories, design.k());
    let prior = if args.applied_prior {
        PriorConfig::applied(j, k)
    } else {
        PriorConfig::simulation(j, k)
    };
    let mi = MiSettings {
        imputations: args.imputations,
        ..MiSettings::default()
    };

    let config = serde_json::json!({
        "args": args,
        "sampler": sampler,
        "prior": prior,
        "mi": mi,
        "labels": pop.labels(),
        "covariates": design.z_names,
    });
    let mut out = OutputDir::create(&args.out, "fit", config, sampler.seed)?;
    let fit = run_method(method, &pop, &cases, &design, &prior, &sampler, &mi, 0)?;
    let est = estimand_draws(&fit.draws, method.kind(), &pop, &design)?;
    let summaries = summarize_estimands(&est);

    let path = out.path("draws.csv")?;
    write_draws_csv(std::io::BufWriter::new(std::fs::File::create(path)?), &fit.draws)?;
    out.write_json(
        "diagnostics.json",
        &serde_json::json!({
            "summary": fit.diagnostics,
            "parameters": fit.draws.names,
            "per_parameter": Diagnostics::compute(&fit.draws),
        }),
    )?;
    let text = summary_text(method, &summaries);
    out.write_text("estimands.txt", &text)?;
    out.write_json(
        "estimands.json",
        &MethodResult {
            method,
            summaries,
            diagnostics: Some(fit.diagnostics.clone()),
            error: None,
        },
    )?;
    print!("{text}");
    let d = &fit.diagnostics;
    println!(
        "max R-hat {:.3}, divergences {}, max-depth hits {}",
        d.max_rhat, d.divergences, d.max_depth_hits
    );
    out.finish()
}
