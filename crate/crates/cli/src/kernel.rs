use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use quasirest::propagator::{fit_kernel_exponents, restricted_kernel_decay, KernelFit};
use quasirest::scaling::VERSION;
use serde::{Deserialize, Serialize};

use crate::config::{load, KernelSpec, Overrides};
use crate::render::kernel_plots;
use crate::run::dir_name;
use crate::store::{encode_table, RunDir, RunManifest};
use crate::Status;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Kernel sweep config (TOML).
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentVerdict {
    pub exponent: String,
    pub measured: f64,
    pub expected: f64,
    pub relative_tolerance: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    window: f64,
    t_max: f64,
    fit: &'a KernelFit,
}

pub fn run(args: &Args) -> Result<Status> {
    let shown = args.config.display();
    let loaded = load::<KernelSpec>(&args.config)?;
    let mut spec = loaded.value;
    spec.apply(&args.overrides).map_err(|e| anyhow!("config {shown}: {e:#}"))?;
    let in_config = |e: anyhow::Error| anyhow!("config {shown}: {e:#}");
    let symbol = spec.symbol().map_err(in_config)?;
    let cfg = spec.kernel_config().map_err(in_config)?;
    let t_max = spec.t_max().map_err(in_config)?;

    if args.overrides.dry_run {
        println!("kernel sweep {} for {} ({} pairs, window M = {})", spec.name, symbol.name(), cfg.pairs.len(), spec.window);
        for &h in &cfg.h_list {
            let g = cfg.grid_for(h)?;
            println!("  h = {h:.6e}  grid {}^{} = {} points", g.points_per_axis, g.dim, g.len());
        }
        return Ok(Status::Pass);
    }

    let stamp = chrono::Utc::now();
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let est = restricted_kernel_decay(&symbol, &cfg)?;
    timings.insert("restricted_kernel_decay".to_string(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    let fit = fit_kernel_exponents(&est, spec.window, t_max).context("fit")?;
    timings.insert("fit_kernel_exponents".to_string(), t.elapsed().as_secs_f64());

    let verdicts: Vec<ExponentVerdict> = match &spec.expect {
        None => Vec::new(),
        Some(e) => [("sigma_inf", e.sigma_inf, fit.sigma_inf), ("mu_inf", e.mu_inf, fit.mu_inf), ("sigma_2", e.sigma_2, fit.sigma_2), ("mu_2", e.mu_2, fit.mu_2)]
            .into_iter()
            .filter_map(|(name, want, got)| {
                want.map(|w| ExponentVerdict {
                    exponent: name.to_string(),
                    measured: got,
                    expected: w,
                    relative_tolerance: e.relative_tolerance,
                    pass: (got - w).abs() <= e.relative_tolerance * w.abs(),
                })
            })
            .collect(),
    };

    let t = Instant::now();
    let hash = spec.hash();
    let mut dir = RunDir::create(&dir_name(&spec.name), &hash, &stamp)?;
    let (csv, jsonl) = encode_table(&est.rows)?;
    dir.write("table.csv", &csv)?;
    dir.write("table.jsonl", &jsonl)?;
    dir.write("fit.json", serde_json::to_string_pretty(&FitSummary { window: spec.window, t_max, fit: &fit })?.as_bytes())?;
    if !verdicts.is_empty() {
        let (csv, jsonl) = encode_table(&verdicts)?;
        dir.write("verdicts.csv", &csv)?;
        dir.write("verdicts.jsonl", &jsonl)?;
    }
    let plots = kernel_plots(&est.rows);
    for (rel, bytes) in &plots {
        dir.write(rel, bytes)?;
    }
    timings.insert("write".to_string(), t.elapsed().as_secs_f64());
    let manifest = RunManifest {
        kind: "kernel".into(),
        name: spec.name.clone(),
        config_file: args.config.display().to_string(),
        config_sha256: loaded.sha256,
        spec_hash: hash,
        timestamp: stamp.to_rfc3339(),
        version: VERSION.to_string(),
        timings,
        outputs: Vec::new(),
        plots: plots.iter().map(|p| p.0.clone()).collect(),
        spec: serde_json::to_value(&spec)?,
    };
    let path = dir.finish(manifest)?;

    println!("kernel {} on {} rows ({} in the fit window)", symbol.name(), est.rows.len(), fit.rows_used);
    println!("  sup:    sigma_inf = {:.4}  mu_inf = {:.4}  max residual {:.2e}", fit.sigma_inf, fit.mu_inf, fit.residual_inf);
    println!("  L2->L2: sigma_2   = {:.4}  mu_2   = {:.4}  max residual {:.2e}", fit.sigma_2, fit.mu_2, fit.residual_2);
    for v in &verdicts {
        println!(
            "  {:<9} {:.4} vs {} within {}%: {}",
            v.exponent,
            v.measured,
            v.expected,
            100.0 * v.relative_tolerance,
            if v.pass { "PASS" } else { "FAIL" }
        );
    }
    println!("results: {}", path.display());
    Ok(if verdicts.iter().all(|v| v.pass) { Status::Pass } else { Status::Fail })
}
