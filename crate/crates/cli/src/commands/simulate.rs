use anyhow::{Context, Result};
use missrate_core::io::{write_cases, write_design, write_population};
use missrate_core::study::{dataset_truth, observed_share, replicate_dataset, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::args::SimulateArgs;
use crate::inputs;
use crate::output::OutputDir;

/// Contents of `rep-NNN/truth.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TruthFile {
    pub replicate: usize,
    pub truth: Vec<(String, f64)>,
    pub observed_share: Vec<f64>,
}

pub fn replicate_dir(r: usize) -> String {
    format!("rep-{:03}", r + 1)
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let seed = args.seed.unwrap_or(1);
    let pop = inputs::population_from(&args.pop, seed)?;
    let design = inputs::design(&pop, None)?;
    let spec = match args.scenario.parse::<f64>() {
        Ok(target) => ScenarioSpec::reference(target, &pop, &design, args.replicates.unwrap_or(2), seed)?,
        Err(_) => {
            let text = std::fs::read_to_string(&args.scenario)
                .with_context(|| format!("reading scenario {}", args.scenario))?;
            let mut spec: ScenarioSpec = serde_json::from_str(&text)?;
            if let Some(r) = args.replicates {
                spec.replicates = r;
            }
            if let Some(s) = args.seed {
                spec.seed = s;
            }
            spec
        }
    };
    if spec.replicates == 0 {
        return Err(crate::ValidationFailed("at least one replicate is required".into()).into());
    }
    spec.check(pop.dims().categories, design.k())?;

    let config = serde_json::json!({
        "args": args,
        "scenario": spec,
        "labels": pop.labels(),
    });
    let mut out = OutputDir::create(&args.out, "simulate", config, spec.seed)?;
    let mut buf = Vec::new();
    write_population(&mut buf, &pop)?;
    out.write_text("population.csv", std::str::from_utf8(&buf)?)?;
    buf.clear();
    write_design(&mut buf, &design, &pop)?;
    out.write_text("design.csv", std::str::from_utf8(&buf)?)?;
    out.write_json("scenario.json", &spec)?;

    for r in 0..spec.replicates {
        let data = replicate_dataset(&pop, &design, &spec, r)?;
        let dir = replicate_dir(r);
        buf.clear();
        write_cases(&mut buf, &data.cases, &pop)?;
        out.write_text(&format!("{dir}/cases.csv"), std::str::from_utf8(&buf)?)?;
        let truth = TruthFile {
            replicate: r,
            truth: dataset_truth(&data, &pop, &design)?,
            observed_share: observed_share(&data, &pop),
        };
        out.write_json(&format!("{dir}/truth.json"), &truth)?;
    }
    println!(
        "simulated {} replicates of `{}` into {}",
        spec.replicates,
        spec.name,
        args.out.display()
    );
    out.finish()
}
