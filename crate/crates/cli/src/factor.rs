use anyhow::{bail, Context, Result};
use quasirest::factorization::{admissibility_check, characteristic_samples, symbol_factor, FormClass};
use quasirest::symbol::builtin;

use crate::Status;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Built-in symbol: sphere, hyperbola, indefinite, flat, degenerate, affine, oscillator, pendulum, free.
    pub name: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Base point x0, comma separated (default: the origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Base frequency xi0 on the characteristic set, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi: Option<Vec<f64>>,
    /// Frequency axis to solve for, counted from 1.
    #[arg(long, default_value_t = 1)]
    pub axis: usize,
    /// Characteristic points for the admissibility report.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
}

fn vec_str(v: &[f64]) -> String {
    format!("({})", v.iter().map(|t| format!("{t:.6}")).collect::<Vec<_>>().join(", "))
}

fn box_str(b: &[(f64, f64)]) -> String {
    b.iter().map(|(a, c)| format!("[{a:.4}, {c:.4}]")).collect::<Vec<_>>().join(" x ")
}

pub fn run(args: &Args) -> Result<Status> {
    let sym = builtin::by_name(&args.name, args.dim)
        .with_context(|| format!("unknown symbol {:?} (known: {})", args.name, builtin::NAMES.join(", ")))?;
    let d = sym.dim();
    if args.axis == 0 || args.axis > d {
        bail!("--axis {} outside 1..={d}", args.axis);
    }
    let axis = args.axis - 1;
    let x0 = args.x.clone().unwrap_or_else(|| vec![0.0; d]);
    let xi0 = match &args.xi {
        Some(v) => v.clone(),
        None => characteristic_samples(&args.name, d, 3)[1].1.clone(),
    };
    println!("symbol {} in dimension {d}", sym.name());
    println!("base point x0 = {}, xi0 = {}, solving for xi{}", vec_str(&x0), vec_str(&xi0), args.axis);

    let f = symbol_factor(&sym, &x0, &xi0, axis)?;
    println!("valid box: x in {}", box_str(&f.valid_box.x));
    println!("           xi in {}", box_str(&f.valid_box.xi));
    let others: Vec<usize> = (0..d).filter(|&i| i != axis).collect();
    println!("branch a(x0, xi') and elliptic factor e(x0, xi) at xi_{} = a:", args.axis);
    for j in 0..5 {
        let mut xi = xi0.clone();
        if let Some(&o) = others.first() {
            let (lo, hi) = f.valid_box.xi[o];
            let s = lo + (hi - lo) * (0.1 + 0.2 * j as f64);
            xi[o] = s;
        } else if j > 0 {
            break;
        }
        let a = f.a.value(&x0, &xi);
        xi[axis] = a;
        let e = f.elliptic_factor.value(&x0, &xi);
        println!("  xi = {}  a = {a:.8}  e = {e:.8}", vec_str(&xi));
    }
    println!("max |p - e (xi_{} - a)| on the box: {:.3e}", args.axis, f.max_residual(&sym, 5));
    println!("min |e| on the box: {:.6}", f.min_elliptic(5));

    let samples = match (&args.x, &args.xi) {
        (None, None) => characteristic_samples(&args.name, d, args.samples),
        _ => vec![(x0.clone(), xi0.clone())],
    };
    let report = admissibility_check(&sym, &samples)?;
    println!("admissibility at {} characteristic points:", report.points.len());
    for p in &report.points {
        let form = match p.form {
            FormClass::PositiveDefinite => "positive definite",
            FormClass::NonDegenerate => "non-degenerate, not positive",
            FormClass::Degenerate => "degenerate",
        };
        println!(
            "  xi = {}  |grad_xi p| = {:.4}  (A1) {}  second fundamental form {form} {:?}",
            vec_str(&p.xi),
            p.gradient_norm,
            if p.a1 { "yes" } else { "no" },
            p.eigenvalues.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>()
        );
    }
    println!("(A1): {}", if report.a1() { "holds" } else { "fails" });
    println!("(A2): {}", if report.a2() { "holds" } else { "fails" });
    Ok(Status::Pass)
}
