//! h-ladder experiments: generate a quasimode family, restrict it, take
//! `L^p` norms, fit power laws in `1/h` and compare against `δ(n, k, p)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exponent::{delta_of, DeltaResult, Lp};
use crate::fit::least_squares;
use crate::grid::PeriodicGrid;
use crate::harmonics::{coherent_state, oscillator_mode, sphere_h, SphereHarmonic, MIN_RUNGS};
use crate::restriction::{restrict, restrict_harmonic, RestrictionSample, Submanifold, NODES_PER_WAVELENGTH};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residual ratio above which the two coarsest rungs are dropped.
pub const TRIM_RATIO: f64 = 3.0;

/// Relative residual gap below which the log comparison is inconclusive.
pub const INCONCLUSIVE_GAP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Zonal harmonic on `S^{sphere_dim}`, symmetric about the last axis.
    Zonal { sphere_dim: u32 },
    /// `c_l (x + iy)^l` on S².
    HighestWeight,
    /// The constant 1, measured against the normalised measure of `Y`.
    Constant,
    /// Normalised coherent state on a periodic grid.
    CoherentState { x0: Vec<f64>, xi0: Vec<f64>, period: f64 },
    /// Hermite mode `k` of `h²D² + x²`.
    Oscillator { k: usize, period: f64 },
}

impl Family {
    fn on_sphere(&self) -> bool {
        matches!(self, Family::Zonal { .. } | Family::HighestWeight | Family::Constant)
    }

    fn sphere_dim(&self) -> u32 {
        match self {
            Family::Zonal { sphere_dim } => *sphere_dim,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubmanifoldSpec {
    /// Great circle on S²; inclination `π/2` passes through the poles.
    GreatCircle { inclination: f64 },
    /// Geodesic on S³ in the `(x₀, x₁, x₃)` plane.
    GeodesicS3 { inclination: f64 },
    /// Grid point.
    Point { at: Vec<f64> },
    /// Coordinate slice of a grid.
    Slice { fixed: Vec<(usize, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LadderSpec {
    /// Explicit sphere degrees.
    Degrees { values: Vec<u32> },
    /// `first, 2·first, 4·first, …`
    DoublingDegrees { first: u32, count: usize },
    /// Explicit `h` values.
    H { values: Vec<f64> },
    /// `2^{-first}, …`
    Dyadic { first: u32, count: usize },
}

impl LadderSpec {
    pub fn len(&self) -> usize {
        match self {
            LadderSpec::Degrees { values } => values.len(),
            LadderSpec::H { values } => values.len(),
            LadderSpec::DoublingDegrees { count, .. } | LadderSpec::Dyadic { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub family: Family,
    pub submanifold: SubmanifoldSpec,
    pub p: Vec<Lp>,
    pub ladder: LadderSpec,
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// `(n, k)` for the theory comparison; derived from the geometry when absent.
    #[serde(default)]
    pub theory: Option<(u32, u32)>,
    /// Probe the log-corrected fit as well.
    #[serde(default)]
    pub with_log: bool,
    /// Largest number of sample points per rung.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    1 << 22
}

/// One rung of the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub index: usize,
    pub degree: Option<u32>,
    pub h: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub rung: usize,
    pub degree: Option<u32>,
    pub h: f64,
    pub p: Lp,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec_hash: String,
    pub version: String,
    pub records: Vec<NormRecord>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < MIN_RUNGS {
            return Err(Error::Config(format!("ladder: {} rungs, need at least {MIN_RUNGS}", self.ladder.len())));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance: must be positive".into()));
        }
        if self.p.is_empty() {
            return Err(Error::Config("p: empty list".into()));
        }
        if let Some(bad) = self.p.iter().find(|p| **p < Lp::int(2)) {
            return Err(Error::Config(format!("p: {bad} is below 2")));
        }
        let sphere_ladder = matches!(self.ladder, LadderSpec::Degrees { .. } | LadderSpec::DoublingDegrees { .. });
        if self.family.on_sphere() != sphere_ladder {
            return Err(Error::Config("ladder: sphere families take degree ladders, grid families take h ladders".into()));
        }
        let sphere_y = matches!(self.submanifold, SubmanifoldSpec::GreatCircle { .. } | SubmanifoldSpec::GeodesicS3 { .. });
        if self.family.on_sphere() != sphere_y {
            return Err(Error::Config("submanifold: does not match the family".into()));
        }
        match (&self.family, &self.submanifold) {
            (Family::Zonal { sphere_dim: 3 }, SubmanifoldSpec::GeodesicS3 { .. }) => {}
            (Family::Zonal { sphere_dim: 3 }, _) | (_, SubmanifoldSpec::GeodesicS3 { .. }) => {
                if !matches!(self.family, Family::Constant) {
                    return Err(Error::Config("submanifold: S³ families need an S³ geodesic".into()));
                }
            }
            (Family::Zonal { sphere_dim }, _) if *sphere_dim != 2 => {
                return Err(Error::Config(format!("family.sphere_dim: zonal harmonics on S^{sphere_dim} are not provided")));
            }
            _ => {}
        }
        self.rungs().map(|_| ())
    }

    pub fn rungs(&self) -> Result<Vec<Rung>> {
        let sphere_dim = match (&self.family, &self.submanifold) {
            (_, SubmanifoldSpec::GeodesicS3 { .. }) => 3,
            (f, _) => f.sphere_dim(),
        };
        let degrees: Option<Vec<u32>> = match &self.ladder {
            LadderSpec::Degrees { values } => Some(values.clone()),
            LadderSpec::DoublingDegrees { first, count } => Some(
                (0..*count)
                    .map(|j| first.checked_mul(1u32 << j).ok_or_else(|| Error::Config("ladder: degree overflow".into())))
                    .collect::<Result<_>>()?,
            ),
            _ => None,
        };
        let rungs: Vec<Rung> = match degrees {
            Some(ds) => {
                if ds.iter().any(|&l| l == 0) || ds.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("ladder: degrees must be positive and increasing".into()));
                }
                ds.iter()
                    .enumerate()
                    .map(|(index, &l)| Rung {
                        index,
                        degree: Some(l),
                        h: sphere_h(l, sphere_dim),
                        samples: curve_nodes(l),
                    })
                    .collect()
            }
            None => {
                let hs: Vec<f64> = match &self.ladder {
                    LadderSpec::H { values } => values.clone(),
                    LadderSpec::Dyadic { first, count } => (0..*count).map(|j| 0.5f64.powi((*first as usize + j) as i32)).collect(),
                    _ => unreachable!(),
                };
                if hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) || hs.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::Config("ladder: h values must be positive and decreasing".into()));
                }
                hs.iter()
                    .enumerate()
                    .map(|(index, &h)| {
                        let g = self.grid_for(h)?;
                        Ok(Rung { index, degree: None, h, samples: g.len() })
                    })
                    .collect::<Result<_>>()?
            }
        };
        if let Some(r) = rungs.iter().find(|r| r.samples > self.budget) {
            return Err(Error::Budget(format!("rung {} needs {} samples, budget {}", r.index, r.samples, self.budget)));
        }
        Ok(rungs)
    }

    fn grid_for(&self, h: f64) -> Result<PeriodicGrid> {
        let (dim, period, reach) = match &self.family {
            Family::CoherentState { x0, xi0, period } => {
                if x0.len() != xi0.len() || x0.is_empty() {
                    return Err(Error::Config("family: coherent state centre and frequency differ in dimension".into()));
                }
                (x0.len(), *period, xi0.iter().map(|t| t.abs()).fold(0.0, f64::max) + 5.0 * h.sqrt())
            }
            Family::Oscillator { k, period } => (1, *period, ((2 * k + 1) as f64 * h).sqrt() + 6.0 * h.sqrt()),
            _ => return Err(Error::Config("not a grid family".into())),
        };
        // Nyquist πNh/L at least 1.5 × reach
        let n = (1.5 * reach * period / (PI * h)).ceil().max(8.0) as usize;
        let n = n.next_power_of_two();
        let total = n.checked_pow(dim as u32).ok_or_else(|| Error::Budget("grid size overflow".into()))?;
        if total > self.budget {
            return Err(Error::Budget(format!("h = {h} needs {total} grid points, budget {}", self.budget)));
        }
        PeriodicGrid::new(dim, n, period)
    }

    /// `(n, k)` for the theory comparison.
    pub fn theory_dims(&self) -> Option<(u32, u32)> {
        self.theory.or(match (&self.family, &self.submanifold) {
            (_, SubmanifoldSpec::GreatCircle { .. }) => Some((2, 1)),
            (_, SubmanifoldSpec::GeodesicS3 { .. }) => Some((3, 1)),
            _ => None,
        })
    }

    pub fn theory(&self, p: Lp) -> Result<Option<DeltaResult>> {
        self.theory_dims().map(|(n, k)| delta_of(n, k, p)).transpose()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// 16 nodes per degree: a multiple of 4 so the poles are nodes, and
/// comfortably above the per-wavelength minimum.
fn curve_nodes(l: u32) -> usize {
    let min = (NODES_PER_WAVELENGTH * l as f64).ceil() as usize;
    (16 * l as usize).max(min).max(64)
}

fn sample_rung(spec: &ExperimentSpec, rung: &Rung) -> Result<RestrictionSample> {
    let curve = |nodes: usize| -> Result<Submanifold> {
        match &spec.submanifold {
            SubmanifoldSpec::GreatCircle { inclination } => Submanifold::great_circle(*inclination, nodes),
            SubmanifoldSpec::GeodesicS3 { inclination } => Submanifold::geodesic_s3(*inclination, nodes),
            _ => Err(Error::Config("grid submanifold for a sphere family".into())),
        }
    };
    match &spec.family {
        Family::Zonal { .. } | Family::HighestWeight => {
            let l = rung.degree.expect("sphere rung has a degree");
            let y = match &spec.family {
                Family::Zonal { .. } => {
                    let dim = if matches!(spec.submanifold, SubmanifoldSpec::GeodesicS3 { .. }) { 3 } else { 2 };
                    SphereHarmonic::zonal(l, dim)?
                }
                _ => SphereHarmonic::highest_weight(l)?,
            };
            restrict_harmonic(&y, &curve(rung.samples)?)
        }
        Family::Constant => {
            let c = curve(rung.samples)?;
            let total = c.measure();
            RestrictionSample::new(vec![1.0.into(); c.len()], c.weights.iter().map(|w| w / total).collect())
        }
        Family::CoherentState { x0, xi0, .. } => {
            let grid = spec.grid_for(rung.h)?;
            restrict(&coherent_state(x0, xi0, rung.h, &grid)?, &grid_submanifold(spec, &grid)?)
        }
        Family::Oscillator { k, .. } => {
            let grid = spec.grid_for(rung.h)?;
            restrict(&oscillator_mode(*k, rung.h, &grid)?, &grid_submanifold(spec, &grid)?)
        }
    }
}

fn grid_submanifold(spec: &ExperimentSpec, grid: &PeriodicGrid) -> Result<Submanifold> {
    match &spec.submanifold {
        SubmanifoldSpec::Point { at } => Submanifold::point(grid, at),
        SubmanifoldSpec::Slice { fixed } => Submanifold::coordinate_slice(grid, fixed),
        _ => Err(Error::Config("sphere submanifold for a grid family".into())),
    }
}

/// Runs every rung (in parallel) and returns the `(h, p, norm)` table,
/// ordered by rung then by the order of `spec.p`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let rungs = spec.rungs()?;
    let per_rung: Vec<Result<Vec<NormRecord>>> = rungs
        .par_iter()
        .map(|rung| {
            let ctx = match rung.degree {
                Some(l) => format!("rung {} (l = {l})", rung.index),
                None => format!("rung {} (h = {})", rung.index, rung.h),
            };
            let sample = sample_rung(spec, rung).map_err(|e| e.context(&ctx))?;
            Ok(spec
                .p
                .iter()
                .map(|&p| NormRecord { rung: rung.index, degree: rung.degree, h: rung.h, p, norm: sample.lp_norm(p) })
                .collect())
        })
        .collect();
    let mut records = Vec::new();
    for r in per_rung {
        records.extend(r?);
    }
    Ok(ExperimentResult { spec_hash: spec.hash(), version: VERSION.to_string(), records })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub p: Lp,
    /// `δ` of the requested variant.
    pub slope: f64,
    /// `γ` in `γ · ½ log log(1/h)`; 0 without the log term.
    pub log_coefficient: f64,
    pub intercept: f64,
    /// Max absolute log-residual of the requested variant.
    pub residual: f64,
    pub rungs_used: usize,
    /// Coarse rungs dropped as preasymptotic.
    pub trimmed: usize,
    pub with_log: bool,
    /// The plain fit, always reported.
    pub plain_slope: f64,
    pub plain_residual: f64,
    /// The log fit, reported when probed.
    pub log_slope: Option<f64>,
    pub log_residual: Option<f64>,
}

struct Variant {
    slope: f64,
    gamma: f64,
    intercept: f64,
    residual: f64,
}

fn fit_variant(pts: &[(f64, f64)], with_log: bool) -> Result<Variant> {
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(x, _)| if with_log { vec![x, 0.5 * x.ln(), 1.0] } else { vec![x, 1.0] })
        .collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let f = least_squares(&rows, &y)?;
    let c = &f.coefficients;
    Ok(if with_log {
        Variant { slope: c[0], gamma: c[1], intercept: c[2], residual: f.max_residual() }
    } else {
        Variant { slope: c[0], gamma: 0.0, intercept: c[1], residual: f.max_residual() }
    })
}

/// Fits `log N = δ log(1/h) [+ γ·½ log log(1/h)] + c` over the rungs of `p`.
/// The two coarsest rungs are dropped when the full-ladder residual exceeds
/// [`TRIM_RATIO`] times the residual without them.
pub fn fit_power_law(table: &[NormRecord], p: Lp, with_log: bool) -> Result<ScalingFit> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for r in table.iter().filter(|r| r.p == p) {
        if !(r.norm > 0.0 && r.norm.is_finite()) {
            return Err(Error::Data(format!("norm {} at h = {} is not positive", r.norm, r.h)));
        }
        pts.push(((1.0 / r.h).ln(), r.norm.ln()));
    }
    if pts.len() < MIN_RUNGS {
        return Err(Error::Data(format!("{} rungs for p = {p}, need at least {MIN_RUNGS}", pts.len())));
    }
    if with_log && pts.iter().any(|(x, _)| *x <= 0.0) {
        return Err(Error::Data("log-corrected fit needs h < 1".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let choose = |with_log: bool| -> Result<(Variant, usize)> {
        let full = fit_variant(&pts, with_log)?;
        let trimmed = fit_variant(&pts[2..], with_log)?;
        if full.residual > TRIM_RATIO * trimmed.residual {
            Ok((trimmed, 2))
        } else {
            Ok((full, 0))
        }
    };
    // one trimming decision, made on the variant asked for, shared by both
    let (main, trimmed) = choose(with_log)?;
    let used = &pts[trimmed..];
    let plain = fit_variant(used, false)?;
    let log = if with_log { Some(fit_variant(used, true)?) } else { None };
    Ok(ScalingFit {
        p,
        slope: main.slope,
        log_coefficient: main.gamma,
        intercept: main.intercept,
        residual: main.residual,
        rungs_used: used.len(),
        trimmed,
        with_log,
        plain_slope: plain.slope,
        plain_residual: plain.residual,
        log_slope: log.as_ref().map(|v| v.slope),
        log_residual: log.as_ref().map(|v| v.residual),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Log case where the residual comparison cannot separate the variants;
    /// decided on the slope band alone.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub p: Lp,
    pub pass: bool,
    pub outcome: Outcome,
    pub slope: f64,
    pub theory: f64,
    pub log_case: bool,
    pub tolerance: f64,
    pub plain_residual: f64,
    pub log_residual: Option<f64>,
    pub message: String,
}

/// Compares a fit with the predicted exponent. In the log case the plain
/// slope is compared with the power and the log-corrected fit must have the
/// smaller residual, unless the residuals are within
/// [`INCONCLUSIVE_GAP`] of each other.
pub fn verdict(fit: &ScalingFit, theory: &DeltaResult, tol: f64) -> Verdict {
    let target = theory.power_f64();
    let slope = if theory.log_half_power { fit.plain_slope } else { fit.slope };
    let within = (slope - target).abs() <= tol;
    let (outcome, message) = if !theory.log_half_power {
        let o = if within { Outcome::Pass } else { Outcome::Fail };
        (o, format!("slope {slope:.4} vs {target:.4} (tol {tol})"))
    } else {
        match fit.log_residual {
            None => (Outcome::Fail, "log case needs the log-corrected fit".to_string()),
            Some(lr) => {
                let pr = fit.plain_residual;
                let gap = (pr - lr).abs() / pr.max(lr).max(f64::MIN_POSITIVE);
                let text = format!("slope {slope:.4} vs {target:.4} (tol {tol}); residuals plain {pr:.3e}, log {lr:.3e}");
                if gap < INCONCLUSIVE_GAP {
                    let o = if within { Outcome::Inconclusive } else { Outcome::Fail };
                    (o, format!("{text}; residual comparison inconclusive"))
                } else if within && lr < pr {
                    (Outcome::Pass, text)
                } else {
                    (Outcome::Fail, text)
                }
            }
        }
    };
    Verdict {
        p: fit.p,
        pass: outcome != Outcome::Fail,
        outcome,
        slope,
        theory: target,
        log_case: theory.log_half_power,
        tolerance: tol,
        plain_residual: fit.plain_residual,
        log_residual: fit.log_residual,
        message,
    }
}

/// Fits and judges every `p` of a finished experiment. Exponents without a
/// theory target are fitted but not judged.
pub fn judge(spec: &ExperimentSpec, result: &ExperimentResult, tol: f64) -> Result<Vec<(ScalingFit, Option<Verdict>)>> {
    spec.p
        .iter()
        .map(|&p| {
            let theory = spec.theory(p)?;
            let with_log = spec.with_log || theory.is_some_and(|t| t.log_half_power);
            let fit = fit_power_law(&result.records, p, with_log)?;
            let v = theory.map(|t| verdict(&fit, &t, tol));
            Ok((fit, v))
        })
        .collect()
}

/// Value of `1/p` where the lines through `(1/p, slope)` of two families meet,
/// returned as `p`.
pub fn crossover(upper: &[(Lp, f64)], lower: &[(Lp, f64)]) -> Result<f64> {
    let line = |pts: &[(Lp, f64)]| -> Result<(f64, f64)> {
        let rows: Vec<Vec<f64>> = pts.iter().map(|(p, _)| vec![crate::exponent::ratio_to_f64(p.recip()), 1.0]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let f = least_squares(&rows, &y)?;
        Ok((f.coefficients[0], f.coefficients[1]))
    };
    let (a1, b1) = line(upper)?;
    let (a2, b2) = line(lower)?;
    if (a1 - a2).abs() < 1e-12 {
        return Err(Error::Collinear("parallel slope lines".into()));
    }
    let inv = (b2 - b1) / (a1 - a2);
    if !(inv > 0.0) {
        return Err(Error::Data(format!("lines meet at 1/p = {inv}")));
    }
    Ok(1.0 / inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::Q;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<NormRecord> {
        (5..13)
            .map(|j| {
                let h = 0.5f64.powi(j);
                NormRecord { rung: j as usize, degree: None, h, p: Lp::int(2), norm: f(h) }
            })
            .collect()
    }

    #[test]
    fn pure_power_law() {
        let fit = fit_power_law(&synthetic(|h| 3.0 * h.powf(-0.5)), Lp::int(2), false).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_variant_recovers_gamma() {
        let t = synthetic(|h| h.powf(-0.5) * (1.0 / h).ln().sqrt());
        let fit = fit_power_law(&t, Lp::int(2), true).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-8 && (fit.log_coefficient - 1.0).abs() < 1e-6);
        assert!(fit.residual < 1e-6);
        assert!(fit.plain_slope > 0.5 && fit.plain_residual > fit.residual);
        let v = verdict(&fit, &DeltaResult { power: Q::new(1, 2), log_half_power: true }, 0.1);
        assert_eq!(v.outcome, Outcome::Pass);
    }

    #[test]
    fn verdict_arithmetic() {
        let mut fit = fit_power_law(&synthetic(|h| h.powf(-0.26)), Lp::int(2), false).unwrap();
        let quarter = DeltaResult::plain(Q::new(1, 4));
        assert!(verdict(&fit, &quarter, 0.03).pass);
        fit.slope = 0.40;
        assert!(!verdict(&fit, &quarter, 0.03).pass);
    }

    #[test]
    fn preasymptotic_rungs_are_trimmed() {
        let t = synthetic(|h| h.powf(-0.5) * if h > 0.02 { 1.5 } else { 1.0 });
        let fit = fit_power_law(&t, Lp::int(2), false).unwrap();
        assert_eq!(fit.trimmed, 2);
        assert!((fit.slope - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bad_norms_and_short_ladders() {
        let mut t = synthetic(|h| h.powf(-0.5));
        t[3].norm = 0.0;
        assert!(matches!(fit_power_law(&t, Lp::int(2), false), Err(Error::Data(_))));
        assert!(matches!(fit_power_law(&t[..4], Lp::int(2), false), Err(Error::Data(_))));
    }

    fn sphere_spec(family: Family, inclination: f64) -> ExperimentSpec {
        ExperimentSpec {
            name: "t".into(),
            family,
            submanifold: SubmanifoldSpec::GreatCircle { inclination },
            p: vec![Lp::int(2), Lp::int(4), Lp::int(6), Lp::Infinity],
            ladder: LadderSpec::DoublingDegrees { first: 8, count: 6 },
            tolerance: 0.05,
            seed: 0,
            theory: None,
            with_log: false,
            budget: default_budget(),
        }
    }

    #[test]
    fn constant_family_has_unit_norms() {
        let spec = sphere_spec(Family::Constant, 0.3);
        let r = run_experiment(&spec).unwrap();
        assert!(r.records.iter().all(|x| (x.norm - 1.0).abs() < 1e-12));
        let fit = fit_power_law(&r.records, Lp::int(4), false).unwrap();
        assert!(fit.slope.abs() < 1e-10);
    }

    #[test]
    fn highest_weight_norms_do_not_depend_on_p_shape() {
        let spec = sphere_spec(Family::HighestWeight, 0.0);
        let r = run_experiment(&spec).unwrap();
        for rung in 0..6 {
            let row: Vec<&NormRecord> = r.records.iter().filter(|x| x.rung == rung).collect();
            let c = row.iter().find(|x| x.p == Lp::Infinity).unwrap().norm;
            for x in &row {
                if let Lp::Finite(p) = x.p {
                    let expect = c * (2.0 * PI).powf(1.0 / crate::exponent::ratio_to_f64(p));
                    assert!((x.norm - expect).abs() < 1e-10 * expect);
                }
            }
        }
    }

    #[test]
    fn zonal_norms_grow_and_runs_repeat() {
        let spec = sphere_spec(Family::Zonal { sphere_dim: 2 }, PI / 2.0);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        for p in [Lp::int(4), Lp::int(6), Lp::Infinity] {
            let norms: Vec<f64> = a.records.iter().filter(|x| x.p == p).map(|x| x.norm).collect();
            assert!(norms.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = sphere_spec(Family::Zonal { sphere_dim: 2 }, 1.0);
        s.ladder = LadderSpec::DoublingDegrees { first: 8, count: 5 };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = sphere_spec(Family::Zonal { sphere_dim: 2 }, 1.0);
        s.p.push(Lp::ratio(3, 2));
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = sphere_spec(Family::Zonal { sphere_dim: 2 }, 1.0);
        s.ladder = LadderSpec::Dyadic { first: 3, count: 6 };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = sphere_spec(Family::Zonal { sphere_dim: 2 }, 1.0);
        s.budget = 100;
        assert!(matches!(s.validate(), Err(Error::Budget(_))));
    }

    #[test]
    fn crossing_lines() {
        let upper = [(Lp::int(4), 0.25), (Lp::int(6), 1.0 / 3.0), (Lp::Infinity, 0.5)];
        let lower = [(Lp::int(2), 0.25), (Lp::int(3), 0.25), (Lp::int(4), 0.25)];
        assert!((crossover(&upper, &lower).unwrap() - 4.0).abs() < 1e-10);
    }
}
