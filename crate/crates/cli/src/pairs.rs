use anyhow::{bail, Result};
use quasirest::exponent::{diagonal_pair, parse_rational, solve_governing, strichartz_h_exponent, DiagonalPair};
use quasirest::{Error, Lp, StrichartzAssumptions, Q};

use crate::Status;

fn rational(s: &str) -> std::result::Result<Q, Error> {
    parse_rational(s)
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Dimension of the manifold.
    #[arg(long, requires = "k", conflicts_with_all = ["sigma_inf", "sigma_2", "mu_inf", "mu_2"])]
    pub n: Option<u32>,
    /// Dimension of the submanifold.
    #[arg(long, requires = "n")]
    pub k: Option<u32>,
    /// Decay power of the L¹ → L^∞ bound.
    #[arg(long, value_parser = rational, requires = "sigma_2")]
    pub sigma_inf: Option<Q>,
    /// Decay power of the L² → L² bound.
    #[arg(long, value_parser = rational, requires = "sigma_inf")]
    pub sigma_2: Option<Q>,
    /// h power of the L¹ → L^∞ bound (defaults to sigma-inf).
    #[arg(long, value_parser = rational)]
    pub mu_inf: Option<Q>,
    /// h power of the L² → L² bound (defaults to sigma-2).
    #[arg(long, value_parser = rational)]
    pub mu_2: Option<Q>,
    /// Space exponents to tabulate (repeatable).
    #[arg(long)]
    pub p: Vec<Lp>,
}

pub fn run(args: &Args) -> Result<Status> {
    let mut ps: Vec<Lp> = if args.p.is_empty() {
        [2, 3, 4, 6, 8, 12].into_iter().map(Lp::int).chain([Lp::Infinity]).collect()
    } else {
        args.p.clone()
    };
    let assumptions = match (args.n, args.k, args.sigma_inf, args.sigma_2) {
        (Some(n), Some(k), _, _) => {
            let diag = diagonal_pair(n, k)?;
            match diag {
                DiagonalPair::Point(p) => {
                    println!("diagonal pair: ({p}, {p}), h-exponent {}", p.recip());
                    ps.push(Lp::Finite(p));
                }
                DiagonalPair::Endpoint => println!("diagonal pair: the excluded endpoint (2, 2)"),
                DiagonalPair::None => println!("no diagonal pair: 2(k+1)/(n-1) < 2"),
            }
            let ni = n as i64;
            match StrichartzAssumptions::for_submanifold(n, k) {
                Ok(a) => a,
                Err(_) => {
                    // 2/r = σ∞ whatever p is
                    let inv_r = Q::new(ni - 1, 4);
                    let sigma = Q::new(ni - 1, 2);
                    if inv_r < Q::new(1, 2) {
                        let r = Lp::from_recip(inv_r)?;
                        println!("assumptions degenerate: sigma_inf = sigma_2 = {sigma}; r = {r} for every p, h-exponent {inv_r}");
                    } else {
                        println!("assumptions degenerate: sigma_inf = sigma_2 = {sigma}; no admissible r > 2");
                    }
                    return Ok(Status::Pass);
                }
            }
        }
        (None, None, Some(si), Some(s2)) => {
            let a = StrichartzAssumptions::new(args.mu_inf.unwrap_or(si), si, args.mu_2.unwrap_or(s2), s2)?;
            // r = p on 2/r + 2(σ∞ − σ₂)/p = σ∞
            let p = Q::from(2) * (Q::from(1) + si - s2) / si;
            if p > Q::from(2) {
                let h = strichartz_h_exponent(&a, Lp::Finite(p))?;
                println!("diagonal pair: ({p}, {p}), h-exponent {h}");
                ps.push(Lp::Finite(p));
            } else if p == Q::from(2) {
                println!("diagonal pair: the excluded endpoint (2, 2)");
            } else {
                println!("no diagonal pair");
            }
            a
        }
        _ => bail!("give --n and --k, or --sigma-inf and --sigma-2"),
    };
    println!(
        "assumptions: sigma_inf = {}, mu_inf = {}, sigma_2 = {}, mu_2 = {}",
        assumptions.sigma_inf, assumptions.mu_inf, assumptions.sigma_2, assumptions.mu_2
    );
    ps.sort();
    ps.dedup();
    println!("{:>8} {:>8} {:>12}", "p", "r", "h-exponent");
    for p in ps {
        match solve_governing(&assumptions, p) {
            Ok(pair) => {
                let h = strichartz_h_exponent(&assumptions, pair.r).map(|e| e.to_string()).unwrap_or_else(|e| e.to_string());
                println!("{:>8} {:>8} {:>12}", p.to_string(), pair.r.to_string(), h);
            }
            Err(e @ (Error::Endpoint { .. } | Error::NoSolution(_))) => println!("{:>8}  {e}", p.to_string()),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Status::Pass)
}
