//! Evolution `hD_t u + a(x, hD)u = 0`: rays and phases from Hamilton's
//! equations, the leading-order oscillatory-integral parametrix, a spectral
//! reference solver, Duhamel solves, and the decay of restricted kernels.
//!
//! `U(t) = e^{-ita/h}` and the Duhamel formula reads
//! `u(t) = U(t)u₀ + i ∫₀ᵗ U(t−s) f(s) ds` for `hD_t u + a u = h f`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::grid::{GridFunction, PeriodicGrid};
use crate::quantization::{frequency_multiplier, left_matrix, plateau, weyl_matrix, DENSE_LIMIT};
use crate::restriction::{restrict, Submanifold};
use crate::symbol::{Structure, SymbolField};

/// Ray state `(x, ξ)` with the accumulated phase `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RayState {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub phi: f64,
}

/// RK4 integrator for `ẋ = ∂_ξ a`, `ξ̇ = −∂_x a`, `φ̇ = ⟨ξ, ∂_ξ a⟩ − a`.
#[derive(Clone, Debug)]
pub struct HamiltonianFlow {
    pub a: SymbolField,
    pub dt_max: f64,
}

impl HamiltonianFlow {
    pub fn new(a: SymbolField, dt_max: f64) -> Result<Self> {
        if !(dt_max > 0.0) {
            return Err(Error::domain("time step must be positive"));
        }
        if !a.is_real() {
            return Err(Error::domain("rays need a real Hamiltonian"));
        }
        Ok(HamiltonianFlow { a, dt_max })
    }

    fn rhs(&self, x: &[f64], xi: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let gx = self.a.grad_x(x, xi);
        let gxi = self.a.grad_xi(x, xi);
        let dphi = xi.iter().zip(&gxi).map(|(a, b)| a * b).sum::<f64>() - self.a.value(x, xi);
        (gxi, gx.into_iter().map(|v| -v).collect(), dphi)
    }

    /// Integrates from `(x0, ξ0)` with `φ(0) = ⟨x0, ξ0⟩` up to time `t`
    /// (negative times run backwards).
    pub fn trajectory(&self, x0: &[f64], xi0: &[f64], t: f64) -> RayState {
        let phi0 = x0.iter().zip(xi0).map(|(a, b)| a * b).sum();
        let mut s = RayState { x: x0.to_vec(), xi: xi0.to_vec(), phi: phi0 };
        if t == 0.0 {
            return s;
        }
        let steps = (t.abs() / self.dt_max).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let d = x0.len();
        let axpy = |v: &[f64], k: &[f64], c: f64| -> Vec<f64> { v.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        for _ in 0..steps {
            let (k1x, k1p, k1f) = self.rhs(&s.x, &s.xi);
            let (k2x, k2p, k2f) = self.rhs(&axpy(&s.x, &k1x, 0.5 * dt), &axpy(&s.xi, &k1p, 0.5 * dt));
            let (k3x, k3p, k3f) = self.rhs(&axpy(&s.x, &k2x, 0.5 * dt), &axpy(&s.xi, &k2p, 0.5 * dt));
            let (k4x, k4p, k4f) = self.rhs(&axpy(&s.x, &k3x, dt), &axpy(&s.xi, &k3p, dt));
            for i in 0..d {
                s.x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
                s.xi[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
            }
            s.phi += dt / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        }
        s
    }

    /// `∂X(t)/∂x0` at fixed initial momentum, by central differences.
    pub fn position_jacobian(&self, x0: &[f64], eta: &[f64], t: f64) -> DMatrix<f64> {
        let d = x0.len();
        let mut j = DMatrix::zeros(d, d);
        let mut p = x0.to_vec();
        for c in 0..d {
            let e = 1e-6 * x0[c].abs().max(1.0);
            p[c] = x0[c] + e;
            let fwd = self.trajectory(&p, eta, t).x;
            p[c] = x0[c] - e;
            let bwd = self.trajectory(&p, eta, t).x;
            p[c] = x0[c];
            for r in 0..d {
                j[(r, c)] = (fwd[r] - bwd[r]) / (2.0 * e);
            }
        }
        j
    }

    /// `max |MᵀΩM − Ω|` for the Jacobian `M` of the time-`t` flow map.
    pub fn symplectic_drift(&self, x0: &[f64], xi0: &[f64], t: f64) -> f64 {
        let d = x0.len();
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        let mut z: Vec<f64> = x0.iter().chain(xi0).copied().collect();
        for c in 0..2 * d {
            let e = 1e-5 * z[c].abs().max(1.0);
            let z0 = z[c];
            z[c] = z0 + e;
            let f = self.trajectory(&z[..d], &z[d..], t);
            z[c] = z0 - e;
            let b = self.trajectory(&z[..d], &z[d..], t);
            z[c] = z0;
            for r in 0..d {
                m[(r, c)] = (f.x[r] - b.x[r]) / (2.0 * e);
                m[(d + r, c)] = (f.xi[r] - b.xi[r]) / (2.0 * e);
            }
        }
        let mut omega = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            omega[(i, d + i)] = 1.0;
            omega[(d + i, i)] = -1.0;
        }
        (m.transpose() * &omega * &m - omega).amax()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EikonalOptions {
    pub dt_max: f64,
    /// Smallest singular value of `∂X/∂x0` tolerated before a caustic is declared.
    pub caustic_tol: f64,
    /// Box the initial points `x0` must stay in; `None` for no limit.
    pub domain: Option<Vec<(f64, f64)>>,
    /// Time step of the finite-difference residual check.
    pub residual_step: f64,
    /// Residual is checked on at most this many lattice points.
    pub residual_samples: usize,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        EikonalOptions { dt_max: 2e-3, caustic_tol: 1e-3, domain: None, residual_step: 1e-3, residual_samples: 400 }
    }
}

/// Phase `φ(t, x, η)` with its gradients and amplitude on a lattice,
/// stored with `η` fastest, then `x`, then `t`.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    pub times: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub etas: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    /// `∂_xφ`, the momentum at the end of the ray.
    pub grad_x: Vec<Vec<f64>>,
    /// `∂_ηφ`, the initial point of the ray.
    pub grad_eta: Vec<Vec<f64>>,
    /// `|det ∂X/∂x0|^{-1/2}`.
    pub amplitude: Vec<f64>,
    /// Largest `|∂_tφ + a(x, ∂_xφ)|` over the checked points.
    pub eikonal_residual: f64,
}

impl PhaseTable {
    pub fn index(&self, ti: usize, xi: usize, ei: usize) -> usize {
        (ti * self.xs.len() + xi) * self.etas.len() + ei
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

struct Inversion {
    x0: Vec<f64>,
    state: RayState,
    jac: DMatrix<f64>,
}

fn invert_ray(flow: &HamiltonianFlow, x: &[f64], eta: &[f64], t: f64, seed: &[f64], opts: &EikonalOptions) -> Result<Inversion> {
    let d = x.len();
    let mut x0 = seed.to_vec();
    for _ in 0..40 {
        let state = flow.trajectory(&x0, eta, t);
        let jac = flow.position_jacobian(&x0, eta, t);
        let smin = jac.clone().svd(false, false).singular_values.min();
        if smin < opts.caustic_tol {
            return Err(Error::Caustic {
                time: t,
                detail: format!("smallest singular value {smin:.3e} of dX/dx0 at x0 = {x0:?}, eta = {eta:?}"),
            });
        }
        let r = DVector::from_iterator(d, state.x.iter().zip(x).map(|(a, b)| a - b));
        if r.amax() <= 1e-12 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
            if let Some(dom) = &opts.domain {
                if x0.iter().zip(dom).any(|(v, &(lo, hi))| *v < lo || *v > hi) {
                    return Err(Error::DomainEscape(format!("ray reaching {x:?} at t = {t} starts at {x0:?}")));
                }
            }
            return Ok(Inversion { x0, state, jac });
        }
        let step = jac.lu().solve(&r).ok_or_else(|| Error::Caustic { time: t, detail: "singular Jacobian".into() })?;
        for i in 0..d {
            x0[i] -= step[i];
        }
        if x0.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::RootFinding(format!("ray inversion for x = {x:?}, eta = {eta:?}, t = {t} did not converge")))
}

/// Initial guess: move back by the displacement of the ray starting at `x`.
fn back_seed(flow: &HamiltonianFlow, x: &[f64], eta: &[f64], t: f64) -> Vec<f64> {
    let fwd = flow.trajectory(x, eta, t).x;
    x.iter().zip(&fwd).map(|(a, b)| 2.0 * a - b).collect()
}

/// Solves `∂_tφ + a(x, ∂_xφ) = 0`, `φ(0, x, η) = ⟨x, η⟩` by characteristics.
pub fn solve_eikonal(a: &SymbolField, times: &[f64], xs: &[Vec<f64>], etas: &[Vec<f64>], opts: &EikonalOptions) -> Result<PhaseTable> {
    let flow = HamiltonianFlow::new(a.clone(), opts.dt_max)?;
    let d = a.dim();
    if xs.iter().chain(etas).any(|v| v.len() != d) {
        return Err(Error::Dimension(format!("lattice points must have dimension {d}")));
    }
    if times.iter().any(|t| *t < 0.0) {
        return Err(Error::domain("times must be non-negative"));
    }
    let nx = xs.len();
    let ne = etas.len();
    // per η: sweep times in order, seeding each inversion from the previous time
    let per_eta: Vec<Result<Vec<(f64, Vec<f64>, Vec<f64>, f64)>>> = (0..ne)
        .into_par_iter()
        .map(|ei| {
            let eta = &etas[ei];
            let mut out = vec![(0.0, vec![], vec![], 0.0); times.len() * nx];
            let mut seeds: Vec<Vec<f64>> = xs.to_vec();
            for (ti, &t) in times.iter().enumerate() {
                for (xi, x) in xs.iter().enumerate() {
                    let slot = ti * nx + xi;
                    if t == 0.0 {
                        let phi = x.iter().zip(eta).map(|(a, b)| a * b).sum();
                        out[slot] = (phi, eta.clone(), x.clone(), 1.0);
                        continue;
                    }
                    let seed = if ti > 0 && times[ti - 1] > 0.0 { seeds[xi].clone() } else { back_seed(&flow, x, eta, t) };
                    let inv = match invert_ray(&flow, x, eta, t, &seed, opts) {
                        Ok(v) => v,
                        Err(Error::RootFinding(_)) => invert_ray(&flow, x, eta, t, &back_seed(&flow, x, eta, t), opts)?,
                        Err(e) => return Err(e),
                    };
                    let det = inv.jac.determinant().abs();
                    seeds[xi] = inv.x0.clone();
                    out[slot] = (inv.state.phi, inv.state.xi, inv.x0, det.powf(-0.5));
                }
            }
            Ok(out)
        })
        .collect();
    let mut phi = vec![0.0; times.len() * nx * ne];
    let mut grad_x = vec![vec![]; phi.len()];
    let mut grad_eta = vec![vec![]; phi.len()];
    let mut amplitude = vec![0.0; phi.len()];
    for (ei, res) in per_eta.into_iter().enumerate() {
        for (slot, (p, gx, ge, b)) in res?.into_iter().enumerate() {
            let k = slot * ne + ei;
            phi[k] = p;
            grad_x[k] = gx;
            grad_eta[k] = ge;
            amplitude[k] = b;
        }
    }
    let mut table = PhaseTable {
        times: times.to_vec(),
        xs: xs.to_vec(),
        etas: etas.to_vec(),
        phi,
        grad_x,
        grad_eta,
        amplitude,
        eikonal_residual: 0.0,
    };
    table.eikonal_residual = eikonal_residual(&flow, &table, opts)?;
    Ok(table)
}

fn eikonal_residual(flow: &HamiltonianFlow, table: &PhaseTable, opts: &EikonalOptions) -> Result<f64> {
    let dt = opts.residual_step;
    let candidates: Vec<(usize, usize, usize)> = (0..table.times.len())
        .filter(|&ti| table.times[ti] >= 2.0 * dt)
        .flat_map(|ti| (0..table.xs.len()).flat_map(move |xi| (0..table.etas.len()).map(move |ei| (ti, xi, ei))))
        .collect();
    if candidates.is_empty() {
        return Ok(0.0);
    }
    let stride = candidates.len().div_ceil(opts.residual_samples.max(1));
    let picked: Vec<_> = candidates.into_iter().step_by(stride).collect();
    let worst = picked
        .into_par_iter()
        .map(|(ti, xi, ei)| -> Result<f64> {
            let t = table.times[ti];
            let x = &table.xs[xi];
            let eta = &table.etas[ei];
            let k = table.index(ti, xi, ei);
            let seed = &table.grad_eta[k];
            let mut vals = [0.0; 4];
            for (slot, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
                vals[slot] = invert_ray(flow, x, eta, t + off * dt, seed, opts)?.state.phi;
            }
            let phi_t = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * dt);
            Ok((phi_t + flow.a.value(x, &table.grad_x[k])).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// `(2πh)^{-d} ∫∫ e^{i(φ(t,x,η) − ⟨w,η⟩)/h} b u₀(w) dw dη` on the table's `x`
/// points; the table's `η` must be lattice frequencies of `u0`'s grid.
/// Grid points not in the table are set to zero.
pub fn apply_parametrix(table: &PhaseTable, u0: &GridFunction, t: f64) -> Result<GridFunction> {
    let ti = table
        .time_index(t)
        .ok_or_else(|| Error::domain(format!("t = {t} is not a time of the phase table (horizon {:?})", table.times.last())))?;
    let grid = u0.grid;
    let h = u0.h;
    let spec = u0.spectrum();
    // locate each η on the frequency lattice
    let mut eta_slots = Vec::with_capacity(table.etas.len());
    let mut covered = vec![false; grid.len()];
    for eta in &table.etas {
        let mut idx = Vec::with_capacity(grid.dim);
        for &e in eta {
            let m = e * grid.period / (2.0 * PI * h);
            if (m - m.round()).abs() > 1e-6 {
                return Err(Error::domain(format!("eta = {e} is not on the frequency lattice")));
            }
            idx.push((m.round() as i64).rem_euclid(grid.points_per_axis as i64) as usize);
        }
        let flat = grid.flat_index(&idx);
        covered[flat] = true;
        eta_slots.push(flat);
    }
    let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
    let missed: f64 = spec.iter().zip(&covered).filter(|(_, c)| !**c).map(|(v, _)| v.norm_sqr()).sum();
    if total > 0.0 && missed > 1e-16 * total {
        return Err(Error::domain(format!(
            "frequency support not covered by the table (relative mass {:.3e} outside)",
            (missed / total).sqrt()
        )));
    }
    // Σ_l u_l e^{-iκ·x_l} = e^{iκ·L/2 · (1,…,1)} û_m
    let shifted: Vec<Complex64> = eta_slots
        .iter()
        .zip(&table.etas)
        .map(|(&m, eta)| {
            let ph: f64 = eta.iter().map(|e| e / h * 0.5 * grid.period).sum();
            spec[m] * Complex64::from_polar(1.0, ph)
        })
        .collect();
    let scale = 1.0 / grid.len() as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let out: Vec<(usize, Complex64)> = table
        .xs
        .par_iter()
        .enumerate()
        .map(|(xi, x)| {
            let idx: Vec<usize> = x
                .iter()
                .map(|&c| (((c + 0.5 * grid.period) / grid.spacing()).round() as i64).rem_euclid(grid.points_per_axis as i64) as usize)
                .collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for ei in 0..table.etas.len() {
                let k = table.index(ti, xi, ei);
                acc += shifted[ei] * Complex64::from_polar(table.amplitude[k], table.phi[k] / h);
            }
            (grid.flat_index(&idx), acc * scale)
        })
        .collect();
    for (j, v) in out {
        values[j] = v;
    }
    Ok(GridFunction { grid, values, h })
}

enum Scheme {
    Multiplier(Vec<f64>),
    Potential(Vec<f64>),
    Split { kinetic: Vec<f64>, potential: Vec<f64> },
    Hermitian { vectors: DMatrix<Complex64>, values: Vec<f64> },
    General(DMatrix<Complex64>),
}

/// High-accuracy solver for `hD_t u + a(x,hD)u = 0` on a fixed grid and `h`.
pub struct ReferencePropagator {
    pub grid: PeriodicGrid,
    pub h: f64,
    pub dt_max: f64,
    scheme: Scheme,
}

impl ReferencePropagator {
    pub fn new(a: &SymbolField, grid: &PeriodicGrid, h: f64, dt_max: f64) -> Result<Self> {
        if a.dim() != grid.dim {
            return Err(Error::Dimension(format!("symbol dimension {} on a {}-d grid", a.dim(), grid.dim)));
        }
        let kin = |g: &dyn Fn(&[f64]) -> f64| (0..grid.len()).map(|m| g(&grid.frequency(m, h))).collect::<Vec<f64>>();
        let pot = |v: &dyn Fn(&[f64]) -> f64| (0..grid.len()).map(|j| v(&grid.point(j))).collect::<Vec<f64>>();
        let scheme = match (a.is_real(), a.structure()) {
            (true, Structure::Frequency(g)) => Scheme::Multiplier(kin(&|xi| g(xi))),
            (true, Structure::Position(v)) => Scheme::Potential(pot(&|x| v(x))),
            (true, Structure::Sum { kinetic, potential }) => {
                Scheme::Split { kinetic: kin(&|xi| kinetic(xi)), potential: pot(&|x| potential(x)) }
            }
            (true, _) => {
                if grid.len() > DENSE_LIMIT {
                    return Err(Error::Budget(format!("dense propagator on {} points", grid.len())));
                }
                let m = weyl_matrix(a, h, grid)?;
                let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
                let eig = SymmetricEigen::new(herm);
                Scheme::Hermitian { vectors: eig.eigenvectors, values: eig.eigenvalues.iter().copied().collect() }
            }
            (false, _) => {
                log::warn!("symbol {} is not real; the reference propagator is not unitary", a.name());
                if grid.len() > DENSE_LIMIT {
                    return Err(Error::Budget(format!("dense propagator on {} points", grid.len())));
                }
                Scheme::General(left_matrix(a, h, grid)?)
            }
        };
        Ok(ReferencePropagator { grid: *grid, h, dt_max, scheme })
    }

    /// `U(t)u`; negative `t` runs backwards.
    pub fn apply(&self, u: &GridFunction, t: f64) -> Result<GridFunction> {
        if u.grid != self.grid || (u.h - self.h).abs() > 1e-12 * self.h {
            return Err(Error::Dimension("function does not live on the propagator's grid".into()));
        }
        let values = self.apply_values(&u.values, t);
        Ok(GridFunction { grid: self.grid, values, h: self.h })
    }

    pub(crate) fn apply_values(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        let h = self.h;
        let grid = &self.grid;
        let phase = |e: f64, tau: f64| Complex64::from_polar(1.0, -tau * e / h);
        match &self.scheme {
            Scheme::Multiplier(g) => spectral(grid, v, |m| phase(g[m], t)),
            Scheme::Potential(p) => v.iter().zip(p).map(|(u, &e)| u * phase(e, t)).collect(),
            Scheme::Split { kinetic, potential } => {
                if t == 0.0 {
                    return v.to_vec();
                }
                let steps = (t.abs() / self.dt_max).ceil().max(1.0) as usize;
                let dt = t / steps as f64;
                let half: Vec<Complex64> = potential.iter().map(|&e| phase(e, 0.5 * dt)).collect();
                let kin: Vec<Complex64> = kinetic.iter().map(|&e| phase(e, dt)).collect();
                let mut w: Vec<Complex64> = v.to_vec();
                for _ in 0..steps {
                    w.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
                    w = spectral(grid, &w, |m| kin[m]);
                    w.iter_mut().zip(&half).for_each(|(a, b)| *a *= b);
                }
                w
            }
            Scheme::Hermitian { vectors, values } => {
                let x = DVector::from_column_slice(v);
                let c = vectors.adjoint() * x;
                let c = DVector::from_iterator(c.len(), c.iter().zip(values).map(|(a, &e)| a * phase(e, t)));
                (vectors * c).as_slice().to_vec()
            }
            Scheme::General(m) => {
                let gen = m * Complex64::new(0.0, -t / h);
                let x = DVector::from_column_slice(v);
                (gen.exp() * x).as_slice().to_vec()
            }
        }
    }
}

fn spectral(grid: &PeriodicGrid, v: &[Complex64], mult: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    use crate::grid::{fft_nd, Direction};
    let mut s = v.to_vec();
    fft_nd(&mut s, grid, Direction::Forward);
    s.iter_mut().enumerate().for_each(|(m, c)| *c *= mult(m));
    fft_nd(&mut s, grid, Direction::Inverse);
    s
}

/// `U(t)u₀` with `steps` Strang steps (or exact / dense for other symbols).
pub fn reference_propagator(a: &SymbolField, u0: &GridFunction, t: f64, steps: usize) -> Result<GridFunction> {
    let dt = if steps == 0 { t.abs().max(f64::MIN_POSITIVE) } else { t.abs() / steps as f64 };
    ReferencePropagator::new(a, &u0.grid, u0.h, dt.max(f64::MIN_POSITIVE))?.apply(u0, t)
}

/// `U(t)u₀ + i ∫₀ᵗ U(t−s) f(s) ds`, composite midpoint rule in `s`.
pub fn duhamel_solve(
    a: &SymbolField,
    u0: &GridFunction,
    f: &(dyn Fn(f64) -> GridFunction + Sync),
    t: f64,
    intervals: usize,
    dt_max: f64,
) -> Result<GridFunction> {
    let prop = ReferencePropagator::new(a, &u0.grid, u0.h, dt_max)?;
    let mut out = prop.apply(u0, t)?;
    if intervals == 0 {
        return Ok(out);
    }
    let ds = t / intervals as f64;
    let pieces: Vec<Result<Vec<Complex64>>> = (0..intervals)
        .into_par_iter()
        .map(|j| {
            let s = (j as f64 + 0.5) * ds;
            let fs = f(s);
            fs.check_compatible(u0)?;
            Ok(prop.apply_values(&fs.values, t - s))
        })
        .collect();
    let w = Complex64::new(0.0, ds);
    for p in pieces {
        for (o, v) in out.values.iter_mut().zip(p?) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Which part of the grid the kernel is restricted to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SliceSpec {
    /// The origin.
    Point,
    /// Lattice line through the origin.
    Line { direction: Vec<i64>, half_length: Option<f64> },
    /// The whole grid.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub dim: usize,
    pub period: f64,
    pub slice: SliceSpec,
    pub h_list: Vec<f64>,
    /// `(t, s)` pairs.
    pub pairs: Vec<(f64, f64)>,
    /// Frequency cutoff `χ(hD)`: 1 for `|ξ_i| ≤ inner`, 0 beyond `outer`.
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    /// Extra resolved frequency beyond the cutoff, for momentum drift.
    pub frequency_margin: f64,
    /// Largest grid, in points.
    pub budget_points: usize,
    /// Largest kernel matrix side.
    pub max_nodes: usize,
    pub dt_max: f64,
}

impl KernelConfig {
    pub fn new(dim: usize, period: f64, slice: SliceSpec, h_list: Vec<f64>, pairs: Vec<(f64, f64)>) -> Self {
        KernelConfig {
            dim,
            period,
            slice,
            h_list,
            pairs,
            cutoff_inner: 1.0,
            cutoff_outer: 2.0,
            frequency_margin: 0.0,
            budget_points: 1 << 23,
            max_nodes: DENSE_LIMIT,
            dt_max: 1e-3,
        }
    }

    /// Smallest power-of-two grid resolving the cutoff at `h`.
    pub fn grid_for(&self, h: f64) -> Result<PeriodicGrid> {
        let need = 1.25 * self.cutoff_outer + self.frequency_margin;
        let n = (need * self.period / (PI * h)).ceil().max(2.0) as usize;
        let n = n.next_power_of_two();
        let total = n.checked_pow(self.dim as u32).unwrap_or(usize::MAX);
        if total > self.budget_points {
            return Err(Error::Budget(format!(
                "h = {h} needs {n}^{} = {total} points, budget {}; use a smaller period or coarser h",
                self.dim, self.budget_points
            )));
        }
        PeriodicGrid::new(self.dim, n, self.period)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub h: f64,
    pub t: f64,
    pub s: f64,
    pub tau: f64,
    pub points_per_axis: usize,
    pub nodes: usize,
    /// `max |K|`, the `L¹ → L^∞` norm.
    pub sup_norm: f64,
    /// Largest singular value of the weighted kernel, the `L² → L²` norm.
    pub op_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub rows: Vec<KernelRow>,
}

fn cutoff_squared(cfg: &KernelConfig) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |xi: &[f64]| {
        xi.iter()
            .map(|&t| plateau(t, (-cfg.cutoff_outer, cfg.cutoff_outer), (-cfg.cutoff_inner, cfg.cutoff_inner)).powi(2))
            .product()
    }
}

fn submanifold(cfg: &KernelConfig, grid: &PeriodicGrid) -> Result<Submanifold> {
    match &cfg.slice {
        SliceSpec::Point => Submanifold::point(grid, &vec![0.0; grid.dim]),
        SliceSpec::Line { direction, half_length } => Submanifold::lattice_line(grid, direction, *half_length),
        SliceSpec::Full => {
            if grid.dim != 1 {
                return Err(Error::domain("full restriction is provided in one dimension"));
            }
            Submanifold::lattice_line(grid, &[1], None)
        }
    }
}

/// Kernel of `R_Y U(t) χ(hD)² U(s)* R_Y*` for every `h` and `(t, s)`.
pub fn restricted_kernel_decay(a: &SymbolField, cfg: &KernelConfig) -> Result<KernelEstimate> {
    if a.dim() != cfg.dim {
        return Err(Error::Dimension(format!("symbol dimension {} vs config {}", a.dim(), cfg.dim)));
    }
    let mut rows = Vec::new();
    for &h in &cfg.h_list {
        let grid = cfg.grid_for(h)?;
        let y = submanifold(cfg, &grid)?;
        if y.len() > cfg.max_nodes {
            return Err(Error::Budget(format!("{} nodes on the slice exceed {}", y.len(), cfg.max_nodes)));
        }
        let nodes = y.grid_indices().ok_or_else(|| Error::Data("slice nodes must be grid points".into()))?.to_vec();
        let weights = y.weights.clone();
        let chi2 = cutoff_squared(cfg);
        let translation_invariant = a.is_x_independent();
        let prop = if translation_invariant { None } else { Some(ReferencePropagator::new(a, &grid, h, cfg.dt_max)?) };
        let cell = grid.cell_volume();
        for &(t, s) in &cfg.pairs {
            let column = |source: usize| -> Result<Vec<Complex64>> {
                let mut delta = vec![Complex64::new(0.0, 0.0); grid.len()];
                delta[source] = Complex64::new(1.0 / cell, 0.0);
                let p = prop.as_ref().expect("dense columns need a propagator");
                let back = p.apply_values(&delta, -s);
                let cut = frequency_multiplier(&grid, h, &chi2, &back);
                let v = p.apply_values(&cut, t);
                let g = GridFunction { grid, values: v, h };
                Ok(restrict(&g, &y)?.values)
            };
            let m = nodes.len();
            let mut k = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
            if translation_invariant {
                let origin = grid.flat_index(&vec![grid.origin_index(); grid.dim]);
                let mut delta = vec![Complex64::new(0.0, 0.0); grid.len()];
                delta[origin] = Complex64::new(1.0 / cell, 0.0);
                let g = match a.structure() {
                    Structure::Frequency(g) => g.clone(),
                    _ => unreachable!(),
                };
                let tau = t - s;
                let field = spectral(&grid, &delta, |mm| {
                    let xi = grid.frequency(mm, h);
                    Complex64::from_polar(chi2(&xi), -tau * g(&xi) / h)
                });
                let per = grid.points_per_axis;
                let idx: Vec<Vec<usize>> = nodes.iter().map(|&f| grid.multi_index(f)).collect();
                for j in 0..m {
                    for l in 0..m {
                        let shift: Vec<usize> = idx[j]
                            .iter()
                            .zip(&idx[l])
                            .map(|(&a, &b)| (a + grid.origin_index() + per - b) % per)
                            .collect();
                        k[(j, l)] = field[grid.flat_index(&shift)];
                    }
                }
            } else {
                let cols: Vec<Result<Vec<Complex64>>> = nodes.par_iter().map(|&src| column(src)).collect();
                for (l, c) in cols.into_iter().enumerate() {
                    for (j, v) in c?.into_iter().enumerate() {
                        k[(j, l)] = v;
                    }
                }
            }
            let sup_norm = k.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
            let weighted = DMatrix::from_fn(m, m, |j, l| k[(j, l)] * sw[j] * sw[l]);
            let op_norm = if m == 1 { weighted[(0, 0)].norm() } else { weighted.svd(false, false).singular_values.max() };
            rows.push(KernelRow {
                h,
                t,
                s,
                tau: (t - s).abs(),
                points_per_axis: grid.points_per_axis,
                nodes: m,
                sup_norm,
                op_norm,
            });
        }
    }
    Ok(KernelEstimate { rows })
}

/// `(4π c h τ)^{-d/2}`, the modulus of the free kernel of `c|ξ|²` at the origin.
pub fn free_kernel_sup(h: f64, tau: f64, c: f64, dim: usize) -> f64 {
    (4.0 * PI * c * h * tau).powf(-(dim as f64) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFit {
    pub sigma_inf: f64,
    pub mu_inf: f64,
    pub sigma_2: f64,
    pub mu_2: f64,
    pub residual_inf: f64,
    pub residual_2: f64,
    pub rows_used: usize,
}

/// The `|t−s| ≥ Mh` split used for fitting windows.
pub const WINDOW_M: f64 = 8.0;

/// Fits `log v = −μ log h − σ log(h + τ) + c` to rows with `Mh ≤ τ ≤ t_max`.
pub fn fit_kernel_exponents(est: &KernelEstimate, m: f64, t_max: f64) -> Result<KernelFit> {
    let rows: Vec<&KernelRow> = est.rows.iter().filter(|r| r.tau >= m * r.h * (1.0 - 1e-12) && r.tau <= t_max).collect();
    let distinct = |vals: Vec<f64>| {
        let mut v = vals;
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        v
    };
    let hs = distinct(rows.iter().map(|r| r.h).collect());
    let taus = distinct(rows.iter().map(|r| r.tau).collect());
    if hs.len() < 2 || taus.len() < 2 {
        return Err(Error::Collinear(format!("{} h values and {} separations in the window", hs.len(), taus.len())));
    }
    if hs.len() < 4 || taus.len() < 4 {
        return Err(Error::Data(format!("need at least 4 h values and 4 separations, got {} and {}", hs.len(), taus.len())));
    }
    let design: Vec<Vec<f64>> = rows.iter().map(|r| vec![-r.h.ln(), -(r.h + r.tau).ln(), 1.0]).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.sup_norm.ln()).collect();
    let op: Vec<f64> = rows.iter().map(|r| r.op_norm.ln()).collect();
    let fi = least_squares(&design, &sup)?;
    let f2 = least_squares(&design, &op)?;
    Ok(KernelFit {
        mu_inf: fi.coefficients[0],
        sigma_inf: fi.coefficients[1],
        mu_2: f2.coefficients[0],
        sigma_2: f2.coefficients[1],
        residual_inf: fi.max_residual(),
        residual_2: f2.max_residual(),
        rows_used: rows.len(),
    })
}

/// Convenience: discrepancy `‖parametrix − reference‖` at one `t`.
pub fn parametrix_discrepancy(a: &SymbolField, table: &PhaseTable, u0: &GridFunction, t: f64, dt_max: f64) -> Result<f64> {
    let p = apply_parametrix(table, u0, t)?;
    let r = ReferencePropagator::new(a, &u0.grid, u0.h, dt_max)?.apply(u0, t)?;
    Ok(p.sub(&r)?.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::coherent_state;
    use crate::symbol::builtin;

    #[test]
    fn free_rays_are_straight() {
        let flow = HamiltonianFlow::new(builtin::free(2, 1.0), 1e-2).unwrap();
        let s = flow.trajectory(&[0.1, 0.2], &[0.5, -1.0], 0.3);
        assert!((s.x[0] - 0.4).abs() < 1e-13 && (s.x[1] + 0.4).abs() < 1e-13);
        // φ = ⟨x0, η⟩ + t|η|²
        let expect = 0.1 * 0.5 - 0.2 + 0.3 * 1.25;
        assert!((s.phi - expect).abs() < 1e-13);
        assert!(flow.symplectic_drift(&[0.1, 0.2], &[0.5, -1.0], 0.3) < 1e-8);
    }

    #[test]
    fn pendulum_flow_is_symplectic() {
        let flow = HamiltonianFlow::new(builtin::pendulum(), 1e-2).unwrap();
        assert!(flow.symplectic_drift(&[0.3], &[0.7], 2.0) < 1e-6);
    }

    #[test]
    fn free_and_transport_phases() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![-1.0 + 0.5 * i as f64]).collect();
        let etas: Vec<Vec<f64>> = (0..4).map(|i| vec![-0.6 + 0.4 * i as f64]).collect();
        let times = [0.0, 0.1, 0.25];
        let t = solve_eikonal(&builtin::free(1, 1.0), &times, &xs, &etas, &EikonalOptions::default()).unwrap();
        for (ti, &tt) in times.iter().enumerate() {
            for (xi, x) in xs.iter().enumerate() {
                for (ei, e) in etas.iter().enumerate() {
                    let k = t.index(ti, xi, ei);
                    assert!((t.phi[k] - (x[0] * e[0] - tt * e[0] * e[0])).abs() < 1e-10);
                    assert!((t.amplitude[k] - 1.0).abs() < 1e-8);
                }
            }
        }
        assert!(t.eikonal_residual < 1e-8);
        let tr = solve_eikonal(&builtin::transport(vec![0.7]), &times, &xs, &etas, &EikonalOptions::default()).unwrap();
        let k = tr.index(2, 3, 1);
        assert!((tr.phi[k] - (0.5 * -0.2 - 0.25 * 0.7 * -0.2)).abs() < 1e-10);
    }

    #[test]
    fn caustic_is_reported() {
        // ξ²/2 − cos x focuses rays from the well bottom near t = π/2
        let a = SymbolField::sum(1, "well", |xi| 0.5 * xi[0] * xi[0], |x| -x[0].cos())
            .with_grad_x(|x, _| vec![x[0].sin()])
            .with_grad_xi(|_, xi| vec![xi[0]]);
        let r = solve_eikonal(&a, &[0.0, 1.0, PI / 2.0], &[vec![0.0]], &[vec![0.0]], &EikonalOptions::default());
        assert!(matches!(r, Err(Error::Caustic { .. })), "{r:?}");
    }

    #[test]
    fn reference_is_unitary_and_exact_for_plane_waves() {
        let grid = PeriodicGrid::new(1, 128, 2.0 * PI).unwrap();
        let h = 1.0 / 32.0;
        let u = coherent_state(&[0.2], &[0.4], h, &grid).unwrap();
        let v = reference_propagator(&builtin::pendulum(), &u, 0.7, 700).unwrap();
        assert!((v.l2_norm() - 1.0).abs() < 1e-12);
        let xi0 = 5.0 * h;
        let w = GridFunction::from_fn(grid, h, |x| Complex64::from_polar(1.0, x[0] * xi0 / h));
        let out = reference_propagator(&builtin::free(1, 1.0), &w, 0.3, 1).unwrap();
        let expect = w.clone().scale(Complex64::from_polar(1.0, -0.3 * xi0 * xi0 / h));
        assert!(out.sub(&expect).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn dense_scheme_matches_split_scheme() {
        let grid = PeriodicGrid::new(1, 64, 2.0 * PI).unwrap();
        let h = 1.0 / 8.0;
        let u = coherent_state(&[0.0], &[0.5], h, &grid).unwrap();
        let split = builtin::pendulum();
        let general = SymbolField::new(1, "pendulum", |x, xi| 0.5 * xi[0] * xi[0] + x[0].cos());
        let a = ReferencePropagator::new(&split, &grid, h, 1e-4).unwrap().apply(&u, 0.2).unwrap();
        let b = ReferencePropagator::new(&general, &grid, h, 1e-4).unwrap().apply(&u, 0.2).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-6);
    }

    #[test]
    fn parametrix_at_time_zero_is_identity() {
        let grid = PeriodicGrid::new(1, 64, 2.0 * PI).unwrap();
        let h = 1.0 / 8.0;
        let u = coherent_state(&[0.3], &[0.5], h, &grid).unwrap();
        let xs = grid.points();
        let etas = grid.frequencies(h);
        let table = solve_eikonal(&builtin::pendulum(), &[0.0], &xs, &etas, &EikonalOptions::default()).unwrap();
        let p = apply_parametrix(&table, &u, 0.0).unwrap();
        assert!(p.sub(&u).unwrap().l2_norm() < 1e-10);
    }

    #[test]
    fn kernel_fit_recovers_synthetic_exponents() {
        let mut rows = Vec::new();
        for j in 5..10 {
            let h = 0.5f64.powi(j);
            for i in 0..8 {
                let tau = 0.5 * 0.6f64.powi(i);
                let v = h.powf(-0.5) * (h + tau).powf(-0.5);
                rows.push(KernelRow { h, t: tau, s: 0.0, tau, points_per_axis: 0, nodes: 1, sup_norm: v, op_norm: 2.0 * v });
            }
        }
        let f = fit_kernel_exponents(&KernelEstimate { rows: rows.clone() }, 0.0, 1.0).unwrap();
        assert!((f.mu_inf - 0.5).abs() < 1e-10 && (f.sigma_inf - 0.5).abs() < 1e-10);
        assert!(f.residual_inf < 1e-10);
        let equal: Vec<KernelRow> = rows.iter().map(|r| KernelRow { t: 0.1, s: 0.1, tau: 0.0, ..*r }).collect();
        assert!(matches!(fit_kernel_exponents(&KernelEstimate { rows: equal }, 0.0, 1.0), Err(Error::Collinear(_))));
    }
}
