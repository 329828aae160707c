//! Two-column plot data, regenerable from a results directory.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use quasirest::exponent::{delta_breakpoints, ratio_to_f64};
use quasirest::propagator::KernelRow;
use quasirest::scaling::{ExperimentSpec, NormRecord, ScalingFit};
use quasirest::Lp;

use crate::store::{read_jsonl, read_manifest, write_atomic};
use crate::Status;

pub type PlotFile = (String, Vec<u8>);

fn lp_tag(p: Lp) -> String {
    p.to_string().replace('/', "_")
}

fn two_column(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Vec<u8> {
    let mut s = format!("# {header}\n");
    for (x, y) in rows {
        writeln!(s, "{x} {y}").unwrap();
    }
    s.into_bytes()
}

pub fn scaling_plots(spec: &ExperimentSpec, records: &[NormRecord], fits: &[ScalingFit]) -> Result<Vec<PlotFile>> {
    let mut out = Vec::new();
    for &p in &spec.p {
        let rows = records.iter().filter(|r| r.p == p).map(|r| ((1.0 / r.h).ln(), r.norm.ln()));
        out.push((format!("plot/norms_p{}.dat", lp_tag(p)), two_column(&format!("ln(1/h) ln|u|_{{L^{p}(Y)}}"), rows)));
    }
    let mut slopes: Vec<(f64, f64)> = fits.iter().map(|f| (ratio_to_f64(f.p.recip()), f.slope)).collect();
    slopes.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.push(("plot/slopes.dat".into(), two_column("1/p fitted slope", slopes)));
    if let Some((n, k)) = spec.theory_dims() {
        let pts = delta_breakpoints(n, k)?;
        let rows = pts.iter().map(|&(x, d)| (ratio_to_f64(x), ratio_to_f64(d)));
        out.push(("plot/theory.dat".into(), two_column(&format!("1/p delta({n},{k},p)"), rows)));
    }
    Ok(out)
}

pub fn kernel_plots(rows: &[KernelRow]) -> Vec<PlotFile> {
    let mut hs: Vec<f64> = Vec::new();
    for r in rows {
        if !hs.contains(&r.h) {
            hs.push(r.h);
        }
    }
    let mut out = Vec::new();
    for (j, &h) in hs.iter().enumerate() {
        let at: Vec<&KernelRow> = rows.iter().filter(|r| r.h == h).collect();
        let sup = at.iter().map(|r| ((r.h + r.tau).ln(), r.sup_norm.ln()));
        out.push((format!("plot/sup_h{j}.dat"), two_column(&format!("ln(h+|t-s|) ln sup|K| at h = {h}"), sup)));
        let op = at.iter().map(|r| ((r.h + r.tau).ln(), r.op_norm.ln()));
        out.push((format!("plot/opnorm_h{j}.dat"), two_column(&format!("ln(h+|t-s|) ln|K|_{{2->2}} at h = {h}"), op)));
    }
    out
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Run directory holding manifest.json.
    pub dir: PathBuf,
    /// Write the plot data here instead of back into the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<Status> {
    let manifest = read_manifest(&args.dir)?;
    let plots = match manifest.kind.as_str() {
        "scaling" => {
            let spec: ExperimentSpec = serde_json::from_value(manifest.spec.clone()).context("manifest spec")?;
            let records: Vec<NormRecord> = read_jsonl(&args.dir.join("table.jsonl"))?;
            let fits: Vec<ScalingFit> = read_jsonl(&args.dir.join("fits.jsonl"))?;
            scaling_plots(&spec, &records, &fits)?
        }
        "kernel" => kernel_plots(&read_jsonl::<KernelRow>(&args.dir.join("table.jsonl"))?),
        other => bail!("manifest kind {other:?} has no plot data"),
    };
    let names: Vec<&String> = plots.iter().map(|p| &p.0).collect();
    if names.len() != manifest.plots.len() || names.iter().zip(&manifest.plots).any(|(a, b)| *a != b) {
        bail!("regenerated plot set {names:?} differs from the manifest's {:?}", manifest.plots);
    }
    let out = args.out.clone().unwrap_or_else(|| args.dir.clone());
    for (rel, bytes) in &plots {
        let path = out.join(rel);
        write_atomic(&path, bytes)?;
        println!("{}", path.display());
    }
    Ok(Status::Pass)
}
