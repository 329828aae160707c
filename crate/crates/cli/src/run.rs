use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Result};
use quasirest::scaling::{judge, run_experiment, ExperimentSpec, ScalingFit, Verdict, VERSION};

use crate::config::{apply_experiment, load, Overrides};
use crate::render::scaling_plots;
use crate::store::{encode_table, RunDir, RunManifest};
use crate::Status;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Experiment config (TOML).
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn dir_name(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run(args: &Args) -> Result<Status> {
    let shown = args.config.display();
    let loaded = load::<ExperimentSpec>(&args.config)?;
    let mut spec = loaded.value;
    apply_experiment(&mut spec, &args.overrides).map_err(|e| anyhow!("config {shown}: {e:#}"))?;
    spec.validate().map_err(|e| anyhow!("config {shown}: {e}"))?;

    if args.overrides.dry_run {
        println!("experiment {} ({} rungs, p = {})", spec.name, spec.ladder.len(), join(&spec.p));
        for r in spec.rungs()? {
            match r.degree {
                Some(l) => println!("  rung {:>2}: l = {l:>6}  h = {:.6e}  samples = {}", r.index, r.h, r.samples),
                None => println!("  rung {:>2}: h = {:.6e}  samples = {}", r.index, r.h, r.samples),
            }
        }
        return Ok(Status::Pass);
    }

    let stamp = chrono::Utc::now();
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let result = run_experiment(&spec)?;
    timings.insert("run_experiment".to_string(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    let judged = judge(&spec, &result, spec.tolerance)?;
    timings.insert("judge".to_string(), t.elapsed().as_secs_f64());
    let fits: Vec<ScalingFit> = judged.iter().map(|(f, _)| f.clone()).collect();
    let verdicts: Vec<Verdict> = judged.iter().filter_map(|(_, v)| v.clone()).collect();

    let t = Instant::now();
    let mut dir = RunDir::create(&dir_name(&spec.name), &result.spec_hash, &stamp)?;
    for (stem, (csv, jsonl)) in [
        ("table", encode_table(&result.records)?),
        ("fits", encode_table(&fits)?),
        ("verdicts", encode_table(&verdicts)?),
    ] {
        dir.write(&format!("{stem}.csv"), &csv)?;
        dir.write(&format!("{stem}.jsonl"), &jsonl)?;
    }
    let plots = scaling_plots(&spec, &result.records, &fits)?;
    for (rel, bytes) in &plots {
        dir.write(rel, bytes)?;
    }
    timings.insert("write".to_string(), t.elapsed().as_secs_f64());
    let manifest = RunManifest {
        kind: "scaling".into(),
        name: spec.name.clone(),
        config_file: args.config.display().to_string(),
        config_sha256: loaded.sha256,
        spec_hash: result.spec_hash.clone(),
        timestamp: stamp.to_rfc3339(),
        version: VERSION.to_string(),
        timings,
        outputs: Vec::new(),
        plots: plots.iter().map(|p| p.0.clone()).collect(),
        spec: serde_json::to_value(&spec)?,
    };
    let path = dir.finish(manifest)?;

    for (fit, v) in &judged {
        let trimmed = if fit.trimmed > 0 { ", coarse rungs trimmed" } else { "" };
        match v {
            Some(v) => println!("p = {:<5} {:<12} {}{trimmed}", fit.p, format!("{:?}", v.outcome).to_uppercase(), v.message),
            None => println!("p = {:<5} {:<12} slope {:.4} (no theory target){trimmed}", fit.p, "MEASURED", fit.slope),
        }
    }
    println!("results: {}", path.display());
    Ok(if verdicts.iter().all(|v| v.pass) { Status::Pass } else { Status::Fail })
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
