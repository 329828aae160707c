//! Left (Kohn–Nirenberg) and Weyl quantisation on periodic grids, plus the
//! localisation diagnostics built on them.
//!
//! With `û` the unnormalised DFT of `u`, the left quantisation is
//! `Op(p)u(x_j) = N^{-d} Σ_m p(x_j, hκ_m) û_m e^{2πi⟨m,j⟩/N}`. The Weyl form
//! evaluates the symbol at the chart midpoint `(x_j + x_l)/2` and is built as
//! a dense matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Lp;
use crate::grid::{fft_nd, Direction, GridFunction, PeriodicGrid};
use crate::symbol::{PhaseBox, Structure, SymbolField};

/// Largest grid (in points) for which dense operators are assembled.
pub const DENSE_LIMIT: usize = 4096;

fn check_inputs(sym: &SymbolField, h: f64, u: &GridFunction) -> Result<()> {
    if sym.dim() != u.grid.dim {
        return Err(Error::Dimension(format!("symbol dimension {} on a {}-d grid", sym.dim(), u.grid.dim)));
    }
    if !(h > 0.0) || (u.h - h).abs() > 1e-12 * h {
        return Err(Error::Dimension(format!("function carries h = {}, operator uses h = {h}", u.h)));
    }
    check_aliasing(sym, h, &u.grid)
}

/// Errors if the symbol's frequency support is not resolved at this `h`.
pub fn check_aliasing(sym: &SymbolField, h: f64, grid: &PeriodicGrid) -> Result<()> {
    if let Some(b) = sym.support() {
        let need = b.max_frequency();
        let have = grid.nyquist(h);
        if need > have * (1.0 + 1e-12) {
            return Err(Error::Aliasing(format!(
                "symbol {} reaches |xi| = {need:.4} but the grid resolves only {have:.4} at h = {h}",
                sym.name()
            )));
        }
    }
    Ok(())
}

pub(crate) fn frequency_multiplier(grid: &PeriodicGrid, h: f64, g: impl Fn(&[f64]) -> f64 + Sync, values: &[Complex64]) -> Vec<Complex64> {
    let mut spec = values.to_vec();
    fft_nd(&mut spec, grid, Direction::Forward);
    spec.par_iter_mut().enumerate().for_each(|(m, s)| *s *= g(&grid.frequency(m, h)));
    fft_nd(&mut spec, grid, Direction::Inverse);
    spec
}

pub(crate) fn position_multiplier(grid: &PeriodicGrid, v: impl Fn(&[f64]) -> f64 + Sync, values: &[Complex64]) -> Vec<Complex64> {
    values.par_iter().enumerate().map(|(j, u)| u * v(&grid.point(j))).collect()
}

/// `p(x, hD)u`.
pub fn quantize_left(sym: &SymbolField, h: f64, u: &GridFunction) -> Result<GridFunction> {
    check_inputs(sym, h, u)?;
    let grid = u.grid;
    let values = match sym.structure() {
        Structure::Frequency(g) => frequency_multiplier(&grid, h, |xi| g(xi), &u.values),
        Structure::Position(v) => position_multiplier(&grid, |x| v(x), &u.values),
        Structure::Sum { kinetic, potential } => {
            let a = frequency_multiplier(&grid, h, |xi| kinetic(xi), &u.values);
            let b = position_multiplier(&grid, |x| potential(x), &u.values);
            a.into_iter().zip(b).map(|(a, b)| a + b).collect()
        }
        Structure::Product { position, frequency } => {
            let a = frequency_multiplier(&grid, h, |xi| frequency(xi), &u.values);
            position_multiplier(&grid, |x| position(x), &a)
        }
        Structure::General => return quantize_left_dense(sym, h, u),
    };
    Ok(GridFunction { grid, values, h })
}

/// The dense double sum, used for general symbols and as a reference.
pub fn quantize_left_dense(sym: &SymbolField, h: f64, u: &GridFunction) -> Result<GridFunction> {
    check_inputs(sym, h, u)?;
    let grid = u.grid;
    let n = grid.len();
    let spec = u.spectrum();
    let freqs = grid.frequencies(h);
    let idx: Vec<Vec<usize>> = (0..n).map(|i| grid.multi_index(i)).collect();
    let nn = grid.points_per_axis;
    let base = 2.0 * std::f64::consts::PI / nn as f64;
    let values = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = grid.point(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                // ⟨m, j⟩ mod N keeps the phase argument small
                let dot = idx[m].iter().zip(&idx[j]).map(|(a, b)| a * b).sum::<usize>() % nn;
                acc += sym.eval(&x, &freqs[m]) * spec[m] * Complex64::from_polar(1.0, base * dot as f64);
            }
            acc / n as f64
        })
        .collect();
    Ok(GridFunction { grid, values, h })
}

fn dense_guard(grid: &PeriodicGrid) -> Result<()> {
    if grid.len() > DENSE_LIMIT {
        return Err(Error::Budget(format!(
            "dense operator on {} points exceeds the limit {DENSE_LIMIT}",
            grid.len()
        )));
    }
    Ok(())
}

/// Matrix of the left quantisation.
pub fn left_matrix(sym: &SymbolField, h: f64, grid: &PeriodicGrid) -> Result<DMatrix<Complex64>> {
    if sym.dim() != grid.dim {
        return Err(Error::Dimension(format!("symbol dimension {} on a {}-d grid", sym.dim(), grid.dim)));
    }
    check_aliasing(sym, h, grid)?;
    dense_guard(grid)?;
    let n = grid.len();
    let freqs = grid.frequencies(h);
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = grid.point(j);
            let mut col: Vec<Complex64> = freqs.iter().map(|xi| sym.eval(&x, xi)).collect();
            fft_nd(&mut col, grid, Direction::Inverse);
            // col[d] = N^{-d} Σ_m p(x_j, ξ_m) e^{2πi⟨m,d⟩/N}; entry (j, l) uses d = j - l
            let jdx = grid.multi_index(j);
            (0..n)
                .map(|l| {
                    let ldx = grid.multi_index(l);
                    let d: Vec<usize> = jdx
                        .iter()
                        .zip(&ldx)
                        .map(|(a, b)| (a + grid.points_per_axis - b) % grid.points_per_axis)
                        .collect();
                    col[grid.flat_index(&d)]
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |j, l| rows[j][l]))
}

/// Matrix of the Weyl quantisation. One inverse FFT per distinct midpoint.
pub fn weyl_matrix(sym: &SymbolField, h: f64, grid: &PeriodicGrid) -> Result<DMatrix<Complex64>> {
    if sym.dim() != grid.dim {
        return Err(Error::Dimension(format!("symbol dimension {} on a {}-d grid", sym.dim(), grid.dim)));
    }
    check_aliasing(sym, h, grid)?;
    dense_guard(grid)?;
    let nn = grid.points_per_axis;
    let n = grid.len();
    let dim = grid.dim;
    let freqs = grid.frequencies(h);
    let sums = 2 * nn - 1;
    let n_mid = sums.pow(dim as u32);
    let mid_index = |flat: usize| -> Vec<usize> {
        let mut idx = vec![0; dim];
        let mut rest = flat;
        for a in (0..dim).rev() {
            idx[a] = rest % sums;
            rest /= sums;
        }
        idx
    };
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for s in 0..n_mid {
        let sidx = mid_index(s);
        let mid: Vec<f64> = sidx.iter().map(|&t| -0.5 * grid.period + 0.5 * t as f64 * grid.spacing()).collect();
        let mut col: Vec<Complex64> = freqs.iter().map(|xi| sym.eval(&mid, xi)).collect();
        fft_nd(&mut col, grid, Direction::Inverse);
        // all (j, l) with j + l = s on every axis
        let lo: Vec<usize> = sidx.iter().map(|&t| t.saturating_sub(nn - 1)).collect();
        let hi: Vec<usize> = sidx.iter().map(|&t| t.min(nn - 1)).collect();
        let mut jdx = lo.clone();
        loop {
            let mut j = 0;
            let mut l = 0;
            let mut d = 0;
            for a in 0..dim {
                let la = sidx[a] - jdx[a];
                j = j * nn + jdx[a];
                l = l * nn + la;
                d = d * nn + (jdx[a] + nn - la) % nn;
            }
            m[(j, l)] = col[d];
            let mut done = true;
            let mut axis = dim;
            while axis > 0 {
                axis -= 1;
                if jdx[axis] < hi[axis] {
                    jdx[axis] += 1;
                    done = false;
                    break;
                }
                jdx[axis] = lo[axis];
            }
            if done {
                break;
            }
        }
    }
    Ok(m)
}

/// `p^w(x, hD)u`.
pub fn quantize_weyl(sym: &SymbolField, h: f64, u: &GridFunction) -> Result<GridFunction> {
    check_inputs(sym, h, u)?;
    match sym.structure() {
        // midpoint is irrelevant for these forms
        Structure::Frequency(_) | Structure::Position(_) | Structure::Sum { .. } => quantize_left(sym, h, u),
        _ => {
            let m = weyl_matrix(sym, h, &u.grid)?;
            Ok(GridFunction { grid: u.grid, values: apply_matrix(&m, &u.values), h })
        }
    }
}

pub fn apply_matrix(m: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let x = nalgebra::DVector::from_column_slice(v);
    (m * x).as_slice().to_vec()
}

/// Relative Hermitian defect `‖A − A*‖_F / ‖A‖_F`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let diff = m - m.adjoint();
    let norm = m.norm();
    if norm == 0.0 {
        0.0
    } else {
        diff.norm() / norm
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    fn f(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    let a = f(t);
    let b = f(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Plateau on `[lo_in, hi_in]`, vanishing outside `(lo_out, hi_out)`.
pub fn plateau(t: f64, outer: (f64, f64), inner: (f64, f64)) -> f64 {
    let rise = if outer.0.is_finite() { smooth_step((t - outer.0) / (inner.0 - outer.0)) } else { 1.0 };
    let fall = if outer.1.is_finite() { smooth_step((outer.1 - t) / (outer.1 - inner.1)) } else { 1.0 };
    rise * fall
}

/// A smooth product cutoff equal to 1 on `inner` and 0 off `outer`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalisationCutoff {
    pub inner: PhaseBox,
    pub outer: PhaseBox,
}

impl LocalisationCutoff {
    pub fn new(inner: PhaseBox, outer: PhaseBox) -> Result<Self> {
        if inner.dim() != outer.dim() || inner.x.len() != inner.xi.len() || outer.x.len() != outer.xi.len() {
            return Err(Error::Dimension("cutoff boxes must share one dimension".into()));
        }
        let nested = |i: &[(f64, f64)], o: &[(f64, f64)]| {
            i.iter().zip(o).all(|(&(a, b), &(c, d))| {
                a < b && ((c < a && b < d) || (c == f64::NEG_INFINITY && d == f64::INFINITY && a == c && b == d))
            })
        };
        if !nested(&inner.x, &outer.x) || !nested(&inner.xi, &outer.xi) {
            return Err(Error::domain("inner box must sit strictly inside the outer box"));
        }
        Ok(LocalisationCutoff { inner, outer })
    }

    /// Margin `w` around `inner`, no restriction in `x`.
    pub fn frequency(inner: Vec<(f64, f64)>, margin: f64) -> Result<Self> {
        let outer = inner.iter().map(|&(a, b)| (a - margin, b + margin)).collect();
        Self::new(PhaseBox::frequency_only(inner), PhaseBox::frequency_only(outer))
    }

    /// Margin `w` around `inner` in every phase-space direction.
    pub fn boxed(inner: PhaseBox, margin: f64) -> Result<Self> {
        let grow = |v: &[(f64, f64)]| v.iter().map(|&(a, b)| (a - margin, b + margin)).collect();
        let outer = PhaseBox::new(grow(&inner.x), grow(&inner.xi));
        Self::new(inner, outer)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn symbol(&self) -> SymbolField {
        let (ix, ox) = (self.inner.x.clone(), self.outer.x.clone());
        let (ixi, oxi) = (self.inner.xi.clone(), self.outer.xi.clone());
        let pos = move |x: &[f64]| x.iter().enumerate().map(|(i, &t)| plateau(t, ox[i], ix[i])).product();
        let freq = move |xi: &[f64]| xi.iter().enumerate().map(|(i, &t)| plateau(t, oxi[i], ixi[i])).product();
        let x_free = self.outer.x.iter().all(|&(a, b)| a.is_infinite() && b.is_infinite());
        let s = if x_free {
            SymbolField::frequency(self.dim(), "chi", freq)
        } else {
            SymbolField::product(self.dim(), "chi", pos, freq)
        };
        s.with_support(self.outer.clone())
    }
}

/// `‖u − χ(x,hD)u‖`.
pub fn localisation_defect(u: &GridFunction, chi: &LocalisationCutoff) -> Result<f64> {
    let cu = quantize_left(&chi.symbol(), u.h, u)?;
    Ok(u.sub(&cu)?.l2_norm())
}

/// `‖u‖_p / (h^{n(1/p − 1/q)} ‖u‖_q)`.
pub fn sobolev_ratio(u: &GridFunction, p: Lp, q: Lp) -> Result<f64> {
    if q > p {
        return Err(Error::domain(format!("need q <= p, got q = {q}, p = {p}")));
    }
    let n = u.grid.dim as f64;
    let exponent = n * (1.0 / p.to_f64() - 1.0 / q.to_f64());
    Ok(u.lp_norm(p.to_f64()) / (u.h.powf(exponent) * u.lp_norm(q.to_f64())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticReport {
    /// `‖χ(x,hD)u‖`.
    pub localized_norm: f64,
    /// `‖χu − q(x,hD)p(x,hD)u‖` with `q = χ/p`.
    pub parametrix_error: f64,
    /// `‖q(x,hD)p(x,hD)u‖`.
    pub parametrix_term: f64,
    /// Smallest `|p|` seen on the cutoff support.
    pub min_modulus: f64,
}

fn sample_axis(b: (f64, f64), fallback: (f64, f64), count: usize) -> Vec<f64> {
    let lo = if b.0.is_finite() { b.0 } else { fallback.0 };
    let hi = if b.1.is_finite() { b.1 } else { fallback.1 };
    (0..count).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64).collect()
}

fn lattice(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for axis in axes {
        out = out
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
    out
}

/// Smallest `|p|` on a lattice over the outer box of `chi`; errors if `p`
/// vanishes or (for real `p`) changes sign there.
pub fn ellipticity_margin(sym: &SymbolField, chi: &LocalisationCutoff, grid: &PeriodicGrid) -> Result<f64> {
    let d = chi.dim();
    let per_axis = match d {
        1 => 33,
        2 => 11,
        _ => 5,
    };
    let half = 0.5 * grid.period;
    let xs: Vec<Vec<f64>> = chi.outer.x.iter().map(|&b| sample_axis(b, (-half, half), per_axis)).collect();
    let xis: Vec<Vec<f64>> = chi.outer.xi.iter().map(|&b| sample_axis(b, (-1.0, 1.0), per_axis)).collect();
    let xs = lattice(&xs);
    let xis = lattice(&xis);
    let mut min_mod = f64::INFINITY;
    let mut signs = (false, false);
    for x in &xs {
        for xi in &xis {
            let v = sym.eval(x, xi);
            min_mod = min_mod.min(v.norm());
            if sym.is_real() {
                if v.re > 0.0 {
                    signs.0 = true;
                } else if v.re < 0.0 {
                    signs.1 = true;
                }
            }
        }
    }
    if min_mod <= 1e-8 || (signs.0 && signs.1) {
        return Err(Error::Ellipticity(format!(
            "{} vanishes on the cutoff support (min |p| = {min_mod:.3e})",
            sym.name()
        )));
    }
    Ok(min_mod)
}

/// First-order elliptic parametrix check: `‖χu‖` should be `O(h)` when `p`
/// is elliptic on supp χ and `p(x,hD)u = O(h)`.
pub fn elliptic_localize_defect(sym: &SymbolField, chi: &LocalisationCutoff, u: &GridFunction) -> Result<EllipticReport> {
    let min_modulus = ellipticity_margin(sym, chi, &u.grid)?;
    let chi_sym = chi.symbol();
    let q = quotient(&chi_sym, sym);
    let cu = quantize_left(&chi_sym, u.h, u)?;
    let pu = quantize_left(sym, u.h, u)?;
    let qpu = quantize_left(&q, u.h, &pu)?;
    Ok(EllipticReport {
        localized_norm: cu.l2_norm(),
        parametrix_error: cu.sub(&qpu)?.l2_norm(),
        parametrix_term: qpu.l2_norm(),
        min_modulus,
    })
}

/// `χ / p`, keeping product structure when both factors are products.
pub fn quotient(chi: &SymbolField, p: &SymbolField) -> SymbolField {
    let name = format!("({})/({})", chi.name(), p.name());
    let support = chi.support().cloned();
    let out = match (chi.as_product(), p.as_product()) {
        (Some((f1, g1)), Some((f2, g2))) if p.is_real() => {
            let x_free = matches!(chi.structure(), Structure::Frequency(_)) && matches!(p.structure(), Structure::Frequency(_));
            if x_free {
                SymbolField::frequency(chi.dim(), name, move |xi| g1(xi) / g2(xi))
            } else {
                SymbolField::product(chi.dim(), name, move |x| f1(x) / f2(x), move |xi| g1(xi) / g2(xi))
            }
        }
        _ => {
            let (c, d) = (chi.clone(), p.clone());
            let s = SymbolField::new(chi.dim(), name, move |x, xi| {
                let num = c.value(x, xi);
                if num == 0.0 {
                    0.0
                } else {
                    (c.eval(x, xi) / d.eval(x, xi)).re
                }
            });
            if p.is_real() && chi.is_real() {
                s
            } else {
                let (c, d) = (chi.clone(), p.clone());
                s.with_imag(move |x, xi| (c.eval(x, xi) / d.eval(x, xi)).im)
            }
        }
    };
    match support {
        Some(b) => out.with_support(b),
        None => out,
    }
}

/// `‖(Op(p)Op(q) − Op(pq))u‖` for left quantisation.
pub fn composition_defect(p: &SymbolField, q: &SymbolField, u: &GridFunction) -> Result<f64> {
    let qu = quantize_left(q, u.h, u)?;
    let pqu = quantize_left(p, u.h, &qu)?;
    let direct = quantize_left(&p.times(q), u.h, u)?;
    Ok(pqu.sub(&direct)?.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::builtin;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn plane_wave_is_a_multiplier_eigenfunction() {
        let grid = PeriodicGrid::new(2, 32, 2.0 * PI).unwrap();
        let h = 0.1;
        // ξ0 = h κ with κ = (3, -5)
        let xi0 = [0.3, -0.5];
        let u = GridFunction::from_fn(grid, h, |x| Complex64::from_polar(1.0, (x[0] * xi0[0] + x[1] * xi0[1]) / h));
        let out = quantize_left(&builtin::coordinate_frequency(2, 0), h, &u).unwrap();
        let expect = u.clone().scale(c(xi0[0]));
        assert!(out.sub(&expect).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn potential_is_pointwise() {
        let grid = PeriodicGrid::new(1, 64, 6.0).unwrap();
        let u = GridFunction::from_fn(grid, 0.05, |x| Complex64::new((-x[0] * x[0]).exp(), x[0]));
        let v = SymbolField::position(1, "x^2", |x| x[0] * x[0]);
        let out = quantize_left(&v, 0.05, &u).unwrap();
        for (j, w) in out.values.iter().enumerate() {
            let x = grid.coordinate(j);
            assert!((w - u.values[j] * x * x).norm() < 1e-14);
        }
    }

    #[test]
    fn fast_paths_agree_with_dense_sum() {
        let grid = PeriodicGrid::new(1, 32, 2.0 * PI).unwrap();
        let h = 0.2;
        let u = GridFunction::from_fn(grid, h, |x| Complex64::new(x[0].cos(), (2.0 * x[0]).sin()) * (-x[0] * x[0]).exp());
        for sym in [builtin::pendulum(), builtin::oscillator(1.0), SymbolField::product(1, "p", |x| x[0].sin(), |xi| xi[0] * xi[0])] {
            let fast = quantize_left(&sym, h, &u).unwrap();
            let dense = quantize_left_dense(&sym, h, &u).unwrap();
            assert!(fast.sub(&dense).unwrap().l2_norm() < 1e-11, "{}", sym.name());
        }
    }

    #[test]
    fn left_matrix_matches_apply() {
        let grid = PeriodicGrid::new(2, 8, 4.0).unwrap();
        let h = 0.3;
        let sym = SymbolField::new(2, "mix", |x, xi| x[0] * xi[1] + (x[1] - xi[0]).sin());
        let u = GridFunction::from_fn(grid, h, |x| Complex64::new(x[0], x[1] * x[1]));
        let m = left_matrix(&sym, h, &grid).unwrap();
        let direct = quantize_left(&sym, h, &u).unwrap();
        let via = apply_matrix(&m, &u.values);
        let err: f64 = via.iter().zip(&direct.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }

    #[test]
    fn weyl_is_hermitian_for_real_symbols() {
        let grid = PeriodicGrid::new(1, 64, 2.0 * PI).unwrap();
        let sym = SymbolField::new(1, "x xi", |x, xi| x[0].sin() * xi[0] + xi[0] * xi[0] * x[0].cos());
        let m = weyl_matrix(&sym, 0.05, &grid).unwrap();
        assert!(hermitian_defect(&m) < 1e-12);
        let l = left_matrix(&sym, 0.05, &grid).unwrap();
        assert!(hermitian_defect(&l) > 1e-3);
    }

    #[test]
    fn weyl_equals_left_for_multipliers() {
        let grid = PeriodicGrid::new(1, 32, 2.0 * PI).unwrap();
        let sym = SymbolField::new(1, "g", |_, xi| (xi[0] * 3.0).cos() + xi[0]);
        let a = weyl_matrix(&sym, 0.1, &grid).unwrap();
        let b = left_matrix(&sym, 0.1, &grid).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn aliasing_and_dimension_errors() {
        let grid = PeriodicGrid::new(1, 16, 2.0 * PI).unwrap();
        let h = 0.1;
        let u = GridFunction::zeros(grid, h);
        let chi = LocalisationCutoff::frequency(vec![(-1.0, 1.0)], 0.5).unwrap();
        assert!(matches!(quantize_left(&chi.symbol(), h, &u), Err(Error::Aliasing(_))));
        assert!(matches!(quantize_left(&builtin::sphere(2), h, &u), Err(Error::Dimension(_))));
        assert!(matches!(quantize_left(&builtin::pendulum(), 0.2, &u), Err(Error::Dimension(_))));
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let chi = LocalisationCutoff::boxed(PhaseBox::new(vec![(-1.0, 1.0)], vec![(0.0, 1.0)]), 0.5).unwrap();
        let s = chi.symbol();
        assert_eq!(s.value(&[0.3], &[0.5]), 1.0);
        assert_eq!(s.value(&[1.6], &[0.5]), 0.0);
        let mid = s.value(&[1.25], &[0.5]);
        assert!(mid > 0.0 && mid < 1.0);
        assert!(LocalisationCutoff::new(chi.outer.clone(), chi.inner.clone()).is_err());
    }

    #[test]
    fn projection_fixed_point_has_zero_defect() {
        let grid = PeriodicGrid::new(1, 128, 2.0 * PI).unwrap();
        let h = 1.0 / 16.0;
        // spectrum supported where chi ≡ 1
        let u = GridFunction::from_fn(grid, h, |x| Complex64::from_polar(1.0, 5.0 * x[0]) + Complex64::from_polar(0.5, -3.0 * x[0]));
        let chi = LocalisationCutoff::frequency(vec![(-0.5, 0.5)], 0.25).unwrap();
        assert!(localisation_defect(&u, &chi).unwrap() < 1e-12);
        let far = LocalisationCutoff::frequency(vec![(1.0, 2.0)], 0.25).unwrap();
        let d = localisation_defect(&u.clone().normalized(), &far).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sobolev_ratio_identity_and_order() {
        let grid = PeriodicGrid::new(1, 64, 2.0 * PI).unwrap();
        let u = GridFunction::from_fn(grid, 0.1, |x| c((-x[0] * x[0]).exp()));
        assert!((sobolev_ratio(&u, Lp::int(4), Lp::int(4)).unwrap() - 1.0).abs() < 1e-14);
        assert!(sobolev_ratio(&u, Lp::int(2), Lp::Infinity).is_err());
    }

    #[test]
    fn ellipticity_is_enforced() {
        let grid = PeriodicGrid::new(1, 128, 2.0 * PI).unwrap();
        let h = 1.0 / 16.0;
        let u = GridFunction::from_fn(grid, h, |x| c((-x[0] * x[0] / (2.0 * h)).exp())).normalized();
        let osc = builtin::oscillator(1.0);
        let chi = LocalisationCutoff::frequency(vec![(-1.0, 1.0)], 0.5).unwrap();
        assert!(matches!(elliptic_localize_defect(&osc, &chi, &u), Err(Error::Ellipticity(_))));
        let one = SymbolField::frequency(1, "1", |_| 1.0);
        let r = elliptic_localize_defect(&one, &chi, &u).unwrap();
        assert!(r.parametrix_error < 1e-13);
    }
}
