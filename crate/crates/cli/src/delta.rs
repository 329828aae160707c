use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use quasirest::exponent::{delta_breakpoints, delta_of, full_manifold_delta, ratio_to_f64};
use quasirest::{Lp, Q};

use crate::store::write_atomic;
use crate::Status;

const HINT: &str = "hint: need n >= 2, 1 <= k <= n - 1 and p >= 2 (p may be a fraction such as 10/3, or inf)";

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Dimension of the manifold.
    #[arg(long)]
    pub n: u32,
    /// Dimension of the submanifold.
    #[arg(long)]
    pub k: u32,
    #[arg(long, conflicts_with = "sweep")]
    pub p: Option<Lp>,
    /// Tabulate δ against 1/p over [0, 1/2].
    #[arg(long)]
    pub sweep: bool,
    /// Evenly spaced 1/p samples in the sweep, on top of the breakpoints.
    #[arg(long, default_value_t = 40)]
    pub samples: usize,
    /// Also give the whole-manifold exponent.
    #[arg(long)]
    pub full_manifold: bool,
    /// Write the sweep to this file instead of stdout.
    #[arg(long, requires = "sweep")]
    pub out: Option<PathBuf>,
}

fn hinted(e: quasirest::Error) -> anyhow::Error {
    anyhow!("{e}\n{HINT}")
}

pub fn run(args: &Args) -> Result<Status> {
    let (n, k) = (args.n, args.k);
    if let Some(p) = args.p {
        let d = delta_of(n, k, p).map_err(hinted)?;
        println!("delta(n = {n}, k = {k}, p = {p}) = {d} ≈ {:.6}", d.power_f64());
        if args.full_manifold {
            let f = full_manifold_delta(n, p).map_err(hinted)?;
            println!("whole manifold (n = {n}, p = {p}): {f} ≈ {:.6}", ratio_to_f64(f));
        }
        return Ok(Status::Pass);
    }
    if !args.sweep {
        bail!("give --p or --sweep\n{HINT}");
    }
    let text = sweep(n, k, args.samples.max(1), args.full_manifold)?;
    match &args.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(Status::Pass)
}

/// Two-column `(1/p, δ)` data through every breakpoint.
pub fn sweep(n: u32, k: u32, samples: usize, full: bool) -> Result<String> {
    let breaks = delta_breakpoints(n, k).map_err(hinted)?;
    let mut xs: Vec<Q> = (0..=samples).map(|j| Q::new(j as i64, 2 * samples as i64)).collect();
    xs.extend(breaks.iter().map(|b| b.0));
    xs.sort();
    xs.dedup();
    let mut s = String::new();
    writeln!(s, "# delta({n},{k},p) against 1/p").unwrap();
    let shown: Vec<String> = breaks.iter().map(|(x, d)| format!("({x}, {d})")).collect();
    writeln!(s, "# breakpoints (1/p, delta): {}", shown.join(" ")).unwrap();
    if let Ok(d) = delta_of(n, k, Lp::int(2)) {
        if d.log_half_power {
            writeln!(s, "# log^(1/2)(1/h) factor at 1/p = 1/2").unwrap();
        }
    }
    writeln!(s, "# 1/p delta").unwrap();
    for &x in &xs {
        let d = delta_of(n, k, Lp::from_recip(x)?).map_err(hinted)?;
        writeln!(s, "{} {}", ratio_to_f64(x), d.power_f64()).unwrap();
    }
    if full {
        writeln!(s, "\n\n# whole manifold, n = {n}\n# 1/p delta").unwrap();
        for &x in &xs {
            let d = full_manifold_delta(n, Lp::from_recip(x)?).map_err(hinted)?;
            writeln!(s, "{} {}", ratio_to_f64(x), ratio_to_f64(d)).unwrap();
        }
    }
    Ok(s)
}
