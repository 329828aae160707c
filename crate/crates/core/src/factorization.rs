//! Local factorisation `p = e (ξ_i − a(x, ξ'))` near a characteristic point,
//! and the admissibility checks on the characteristic set.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::{PhaseBox, SymbolField};

const MAX_NEWTON: usize = 50;
const ROOT_TOL: f64 = 1e-13;
const ON_SET_TOL: f64 = 1e-8;
const A1_TOL: f64 = 1e-6;
const DEFINITE_TOL: f64 = 1e-6;

/// The solved branch `a`, the elliptic factor `e` and where they are certified.
///
/// `a` is stored as a symbol on the full phase space that ignores `ξ_axis`.
#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub a: SymbolField,
    pub elliptic_factor: SymbolField,
    pub axis: usize,
    pub valid_box: PhaseBox,
}

impl FactorizationResult {
    /// Largest `|p − e(ξ_i − a)|` over a lattice in the valid box.
    pub fn max_residual(&self, sym: &SymbolField, per_axis: usize) -> f64 {
        box_lattice(&self.valid_box, per_axis)
            .into_iter()
            .map(|(x, xi)| {
                let lhs = sym.value(&x, &xi);
                let rhs = self.elliptic_factor.value(&x, &xi) * (xi[self.axis] - self.a.value(&x, &xi));
                (lhs - rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest `|e|` over a lattice in the valid box.
    pub fn min_elliptic(&self, per_axis: usize) -> f64 {
        box_lattice(&self.valid_box, per_axis)
            .into_iter()
            .map(|(x, xi)| self.elliptic_factor.value(&x, &xi).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

fn axis_points((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evenly spaced lattice over a finite phase-space box.
pub fn box_lattice(b: &PhaseBox, per_axis: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = b.dim();
    let axes: Vec<Vec<f64>> = b.x.iter().chain(&b.xi).map(|&r| axis_points(r, per_axis)).collect();
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    points.into_iter().map(|mut p| {
        let xi = p.split_off(d);
        (p, xi)
    }).collect()
}

/// Solves `p(x, ξ) = 0` for `ξ_axis`, Newton from `seed` then bisection.
pub fn solve_branch(sym: &SymbolField, x: &[f64], xi: &[f64], axis: usize, seed: f64, scale: f64) -> Result<f64> {
    let mut e = xi.to_vec();
    let mut t = seed;
    for _ in 0..MAX_NEWTON {
        e[axis] = t;
        let f = sym.value(x, &e);
        if f.abs() <= ROOT_TOL * scale {
            return Ok(t);
        }
        let df = sym.grad_xi(x, &e)[axis];
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let step = f / df;
        t -= step;
        if !t.is_finite() {
            break;
        }
        if step.abs() <= 1e-15 * t.abs().max(1.0) {
            e[axis] = t;
            return Ok(t);
        }
    }
    bisect(sym, x, xi, axis, seed, scale)
}

fn bisect(sym: &SymbolField, x: &[f64], xi: &[f64], axis: usize, seed: f64, scale: f64) -> Result<f64> {
    let mut e = xi.to_vec();
    let mut f = |t: f64| {
        e[axis] = t;
        sym.value(x, &e)
    };
    let f0 = f(seed);
    let mut width = 1e-3;
    let mut bracket = None;
    while width < 1e3 {
        for s in [seed - width, seed + width] {
            if f(s) * f0 <= 0.0 {
                bracket = Some(if s < seed { (s, seed) } else { (seed, s) });
                break;
            }
        }
        if bracket.is_some() {
            break;
        }
        width *= 2.0;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::RootFinding(format!("no sign change around {seed}")))?;
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= ROOT_TOL * scale || hi - lo < 1e-15 * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if fm * flo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Derivative of the characteristic point for (A1) and the scale used by all tolerances.
fn gradient_scale(sym: &SymbolField, x: &[f64], xi: &[f64]) -> f64 {
    let g = sym.grad_xi(x, xi);
    g.iter().map(|t| t * t).sum::<f64>().sqrt().max(1.0)
}

/// Implicit function theorem factorisation around a characteristic point.
pub fn symbol_factor(sym: &SymbolField, x0: &[f64], xi0: &[f64], axis: usize) -> Result<FactorizationResult> {
    let d = sym.dim();
    if x0.len() != d || xi0.len() != d || axis >= d {
        return Err(Error::Dimension(format!("point or axis does not match dimension {d}")));
    }
    let scale = gradient_scale(sym, x0, xi0);
    let p0 = sym.value(x0, xi0);
    if p0.abs() > ON_SET_TOL * scale {
        return Err(Error::domain(format!("|p(x0, xi0)| = {p0:.3e} is off the characteristic set")));
    }
    let d0 = sym.grad_xi(x0, xi0)[axis];
    if d0.abs() < A1_TOL * scale {
        return Err(Error::Degeneracy(format!(
            "d p / d xi_{} = {d0:.3e} at the base point",
            axis + 1
        )));
    }
    let seed = xi0[axis];
    let mut width = 1.0;
    let valid_box = loop {
        if width < 1e-6 {
            return Err(Error::RootFinding("no certified neighbourhood down to width 1e-6".into()));
        }
        if let Some(b) = certify(sym, x0, xi0, axis, width, d0, scale) {
            break b;
        }
        width *= 0.5;
    };

    let s = sym.clone();
    let a_fn = move |x: &[f64], xi: &[f64]| solve_branch(&s, x, xi, axis, seed, scale).unwrap_or(f64::NAN);
    let a_eval = Arc::new(a_fn);
    let a_inner = a_eval.clone();
    let a = SymbolField::new(d, format!("branch of {} in xi{}", sym.name(), axis + 1), move |x, xi| a_inner(x, xi))
        .with_support(valid_box.clone());
    let s = sym.clone();
    let e = SymbolField::new(d, format!("elliptic factor of {}", sym.name()), move |x, xi| {
        let gap = xi[axis] - a_eval(x, xi);
        if gap.abs() > 1e-6 {
            s.value(x, xi) / gap
        } else {
            // removable singularity: first-order Taylor of p along ξ_axis
            let g = s.grad_xi(x, xi)[axis];
            let h = s.hess_xi(x, xi)[axis * d + axis];
            g - 0.5 * h * gap
        }
    })
    .with_support(valid_box.clone());
    Ok(FactorizationResult { a, elliptic_factor: e, axis, valid_box })
}

fn certify(sym: &SymbolField, x0: &[f64], xi0: &[f64], axis: usize, w: f64, d0: f64, scale: f64) -> Option<PhaseBox> {
    let d = sym.dim();
    let xs: Vec<(f64, f64)> = x0.iter().map(|&t| (t - w, t + w)).collect();
    let mut xis: Vec<(f64, f64)> = xi0.iter().map(|&t| (t - w, t + w)).collect();
    let trial = PhaseBox::new(xs.clone(), xis.clone());
    let per_axis = if d <= 2 { 5 } else { 3 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut seen = std::collections::BTreeSet::new();
    for (x, xi) in box_lattice(&trial, per_axis) {
        let mut key = x.clone();
        key.extend(xi.iter().enumerate().filter(|&(i, _)| i != axis).map(|(_, &t)| t));
        let key: Vec<u64> = key.iter().map(|t| t.to_bits()).collect();
        if !seen.insert(key) {
            continue;
        }
        let root = solve_branch(sym, &x, &xi, axis, xi0[axis], scale).ok()?;
        if (root - xi0[axis]).abs() > 4.0 * w.max(1e-3) + 1.0 {
            return None;
        }
        let mut at = xi.clone();
        at[axis] = root;
        if sym.value(&x, &at).abs() > ON_SET_TOL * scale {
            return None;
        }
        let g = sym.grad_xi(&x, &at)[axis];
        if g.abs() < 0.5 * d0.abs() || g.signum() != d0.signum() {
            return None;
        }
        lo = lo.min(root);
        hi = hi.max(root);
    }
    xis[axis] = (lo - w, hi + w);
    let b = PhaseBox::new(xs, xis);
    // e must stay away from zero across the ξ_axis range too
    for (x, xi) in box_lattice(&b, per_axis) {
        let root = solve_branch(sym, &x, &xi, axis, xi0[axis], scale).ok()?;
        let gap = xi[axis] - root;
        let e = if gap.abs() > 1e-6 { sym.value(&x, &xi) / gap } else { sym.grad_xi(&x, &xi)[axis] };
        if e.abs() < 0.25 * d0.abs() || e.signum() != d0.signum() {
            return None;
        }
    }
    Some(b)
}

/// Hessian of the branch `a(x, ξ')` in `ξ'` by implicit differentiation, at
/// a point of the characteristic set. Row-major `(d−1) × (d−1)`.
pub fn branch_hessian(sym: &SymbolField, x: &[f64], xi: &[f64], axis: usize) -> Vec<f64> {
    let d = sym.dim();
    let g = sym.grad_xi(x, xi);
    let hs = sym.hess_xi(x, xi);
    let pi = g[axis];
    let others: Vec<usize> = (0..d).filter(|&j| j != axis).collect();
    let da: Vec<f64> = others.iter().map(|&j| -g[j] / pi).collect();
    let m = others.len();
    let mut out = vec![0.0; m * m];
    for (r, &j) in others.iter().enumerate() {
        for (c, &k) in others.iter().enumerate() {
            let pjk = hs[j * d + k];
            let pij = hs[axis * d + j];
            let pik = hs[axis * d + k];
            let pii = hs[axis * d + axis];
            out[r * m + c] = -(pjk + pij * da[c] + pik * da[r] + pii * da[r] * da[c]) / pi;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormClass {
    PositiveDefinite,
    /// Invertible but with a non-positive eigenvalue.
    NonDegenerate,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub axis: usize,
    pub gradient_norm: f64,
    pub a1: bool,
    /// Eigenvalues of the second fundamental form, ascending.
    pub eigenvalues: Vec<f64>,
    pub form: FormClass,
}

impl AdmissibilityPoint {
    pub fn a2(&self) -> bool {
        self.a1 && self.form == FormClass::PositiveDefinite
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub symbol: String,
    pub points: Vec<AdmissibilityPoint>,
}

impl AdmissibilityReport {
    pub fn a1(&self) -> bool {
        self.points.iter().all(|p| p.a1)
    }

    pub fn a2(&self) -> bool {
        self.points.iter().all(AdmissibilityPoint::a2)
    }
}

/// Checks (A1) and the sign of the second fundamental form at each sample.
///
/// The form is `−sign(∂_{ξ_i}p) ∂²a/∂ξ'²` with `i` the axis of largest
/// `|∂_ξ p|`, which makes the unit sphere positive for either orientation.
pub fn admissibility_check(sym: &SymbolField, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<AdmissibilityReport> {
    let d = sym.dim();
    let mut points = Vec::with_capacity(samples.len());
    for (x, xi) in samples {
        if x.len() != d || xi.len() != d {
            return Err(Error::Dimension(format!("sample does not match dimension {d}")));
        }
        let scale = gradient_scale(sym, x, xi);
        let v = sym.value(x, xi);
        if v.abs() > ON_SET_TOL * scale {
            return Err(Error::domain(format!("sample {xi:?} is off the characteristic set (p = {v:.3e})")));
        }
        let g = sym.grad_xi(x, xi);
        let gradient_norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
        let a1 = gradient_norm >= A1_TOL * scale;
        let axis = (0..d).max_by(|&i, &j| g[i].abs().total_cmp(&g[j].abs())).unwrap_or(0);
        let (eigenvalues, form) = if !a1 {
            (vec![], FormClass::Degenerate)
        } else {
            let hess = branch_hessian(sym, x, xi, axis);
            let m = d - 1;
            let orient = -g[axis].signum();
            let mat = DMatrix::from_row_slice(m, m, &hess) * orient;
            let mut ev: Vec<f64> = if m == 0 { vec![] } else { SymmetricEigen::new(mat).eigenvalues.iter().copied().collect() };
            ev.sort_by(f64::total_cmp);
            let tol = DEFINITE_TOL * scale;
            let form = if ev.iter().all(|&e| e >= tol) {
                FormClass::PositiveDefinite
            } else if ev.iter().all(|&e| e.abs() >= tol) {
                FormClass::NonDegenerate
            } else {
                FormClass::Degenerate
            };
            (ev, form)
        };
        points.push(AdmissibilityPoint { x: x.clone(), xi: xi.clone(), axis, gradient_norm, a1, eigenvalues, form });
    }
    Ok(AdmissibilityReport { symbol: sym.name().to_string(), points })
}

/// Characteristic points of a built-in symbol suitable for a report.
pub fn characteristic_samples(name: &str, dim: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let count = count.max(1);
    let origin = vec![0.0; dim];
    (0..count)
        .map(|i| {
            let s = -0.8 + 1.6 * i as f64 / (count.max(2) - 1) as f64;
            let mut xi = vec![0.0; dim];
            match name {
                "sphere" => {
                    // points on the unit sphere in the (ξ₁, ξ_dim) plane
                    let th = s * std::f64::consts::FRAC_PI_2;
                    xi[0] = th.cos();
                    if dim > 1 {
                        xi[dim - 1] = th.sin();
                    }
                }
                "hyperbola" => {
                    xi[0] = (1.0 + s * s).sqrt();
                    xi[1] = s;
                }
                "flat" => {
                    if dim > 1 {
                        xi[1] = s;
                    }
                }
                "affine" => {
                    xi[1] = s;
                    xi[0] = crate::symbol::builtin::affine_branch_solution(&origin, s);
                }
                _ => {}
            }
            (origin.clone(), xi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::builtin;

    #[test]
    fn sphere_factorises_to_the_square_root() {
        let sym = builtin::sphere(2);
        let f = symbol_factor(&sym, &[0.3, -0.2], &[1.0, 0.0], 0).unwrap();
        for &t in &[-0.3, 0.0, 0.25] {
            let a = f.a.value(&[0.3, -0.2], &[0.0, t]);
            assert!((a - (1.0 - t * t).sqrt()).abs() < 1e-12);
            let e = f.elliptic_factor.value(&[0.3, -0.2], &[0.9, t]);
            assert!((e - (0.9 + (1.0 - t * t).sqrt())).abs() < 1e-9);
        }
        assert!(f.max_residual(&sym, 4) < 1e-8);
        assert!(f.min_elliptic(4) > 0.5);
    }

    #[test]
    fn affine_symbol_has_unit_factor() {
        let sym = builtin::affine_branch();
        let x0 = [0.4, 0.0];
        let xi0 = [builtin::affine_branch_solution(&x0, 0.3), 0.3];
        let f = symbol_factor(&sym, &x0, &xi0, 0).unwrap();
        let x = [0.1, 0.7];
        assert!((f.a.value(&x, &[0.0, -0.2]) - builtin::affine_branch_solution(&x, -0.2)).abs() < 1e-13);
        assert!((f.elliptic_factor.value(&x, &[2.0, -0.2]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_axis_is_rejected() {
        let sym = builtin::coordinate_square(2, 1);
        assert!(matches!(symbol_factor(&sym, &[0.0, 0.0], &[0.4, 0.0], 1), Err(Error::Degeneracy(_))));
        assert!(matches!(symbol_factor(&builtin::sphere(2), &[0.0, 0.0], &[0.5, 0.0], 0), Err(Error::Domain(_))));
    }

    #[test]
    fn admissibility_classes() {
        let sphere = admissibility_check(&builtin::sphere(3), &characteristic_samples("sphere", 3, 5)).unwrap();
        assert!(sphere.a1() && sphere.a2());
        let hyp = admissibility_check(&builtin::hyperbola(), &characteristic_samples("hyperbola", 2, 5)).unwrap();
        assert!(hyp.a1() && !hyp.a2());
        assert!(hyp.points.iter().all(|p| p.form == FormClass::NonDegenerate));
        let flat = admissibility_check(&builtin::coordinate_frequency(2, 0), &characteristic_samples("flat", 2, 3)).unwrap();
        assert!(flat.points.iter().all(|p| p.form == FormClass::Degenerate));
        assert!(admissibility_check(&builtin::sphere(2), &[(vec![0.0, 0.0], vec![2.0, 0.0])]).is_err());
    }

    #[test]
    fn hyperbola_branch_curvature_matches_closed_form() {
        // a(ξ₂) = √(1 + ξ₂²), a'' = (1 + ξ₂²)^{-3/2}
        let sym = builtin::hyperbola();
        for &t in &[-0.5f64, 0.0, 0.7] {
            let a = (1.0 + t * t).sqrt();
            let hs = branch_hessian(&sym, &[0.0, 0.0], &[a, t], 0);
            assert!((hs[0] - (1.0 + t * t).powf(-1.5)).abs() < 1e-12);
        }
    }
}
