//! Phase-space symbols `p(x, ξ)` with derivatives.
//!
//! A [`SymbolField`] is a bundle of shareable callables. Derivatives default
//! to central finite differences of the real part; the built-in symbols carry
//! analytic ones. The optional [`Structure`] tag lets quantisation use FFT
//! fast paths for Fourier multipliers, potentials and their sums or products.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type PhaseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type PhaseVecFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type HalfFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Separable forms recognised by the quantisation fast paths.
#[derive(Clone)]
pub enum Structure {
    General,
    /// `p = g(ξ)`
    Frequency(HalfFn),
    /// `p = V(x)`
    Position(HalfFn),
    /// `p = K(ξ) + V(x)`
    Sum { kinetic: HalfFn, potential: HalfFn },
    /// `p = f(x) g(ξ)`
    Product { position: HalfFn, frequency: HalfFn },
}

impl Structure {
    fn label(&self) -> &'static str {
        match self {
            Structure::General => "general",
            Structure::Frequency(_) => "frequency",
            Structure::Position(_) => "position",
            Structure::Sum { .. } => "sum",
            Structure::Product { .. } => "product",
        }
    }
}

/// Axis-aligned phase-space box. Infinite bounds are allowed, e.g. a pure
/// frequency cutoff has `x` bounds `(-∞, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub x: Vec<(f64, f64)>,
    pub xi: Vec<(f64, f64)>,
}

impl PhaseBox {
    pub fn new(x: Vec<(f64, f64)>, xi: Vec<(f64, f64)>) -> Self {
        PhaseBox { x, xi }
    }

    pub fn frequency_only(xi: Vec<(f64, f64)>) -> Self {
        let x = vec![(f64::NEG_INFINITY, f64::INFINITY); xi.len()];
        PhaseBox { x, xi }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn contains(&self, x: &[f64], xi: &[f64]) -> bool {
        let inside = |b: &[(f64, f64)], v: &[f64]| b.iter().zip(v).all(|(&(lo, hi), &t)| lo <= t && t <= hi);
        inside(&self.x, x) && inside(&self.xi, xi)
    }

    /// Largest `|ξ_i|` over the box.
    pub fn max_frequency(&self) -> f64 {
        self.xi.iter().map(|&(lo, hi)| lo.abs().max(hi.abs())).fold(0.0, f64::max)
    }
}

#[derive(Clone)]
pub struct SymbolField {
    dim: usize,
    name: String,
    re: PhaseFn,
    im: Option<PhaseFn>,
    grad_x: Option<PhaseVecFn>,
    grad_xi: Option<PhaseVecFn>,
    hess_xi: Option<PhaseVecFn>,
    support: Option<PhaseBox>,
    structure: Structure,
}

impl fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("structure", &self.structure.label())
            .field("support", &self.support)
            .field("is_real", &self.is_real())
            .finish()
    }
}

const FD_STEP: f64 = 1e-5;
const FD_STEP_HESS: f64 = 1e-4;

impl SymbolField {
    pub fn new(
        dim: usize,
        name: impl Into<String>,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SymbolField {
            dim,
            name: name.into(),
            re: Arc::new(f),
            im: None,
            grad_x: None,
            grad_xi: None,
            hess_xi: None,
            support: None,
            structure: Structure::General,
        }
    }

    /// A Fourier multiplier `g(ξ)`.
    pub fn frequency(dim: usize, name: impl Into<String>, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let g: HalfFn = Arc::new(g);
        let g2 = g.clone();
        let mut s = SymbolField::new(dim, name, move |_, xi| g2(xi));
        s.grad_x = Some(Arc::new(move |x, _| vec![0.0; x.len()]));
        s.structure = Structure::Frequency(g);
        s
    }

    /// A multiplication operator `V(x)`.
    pub fn position(dim: usize, name: impl Into<String>, v: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let v: HalfFn = Arc::new(v);
        let v2 = v.clone();
        let mut s = SymbolField::new(dim, name, move |x, _| v2(x));
        s.grad_xi = Some(Arc::new(move |_, xi| vec![0.0; xi.len()]));
        s.hess_xi = Some(Arc::new(move |_, xi| vec![0.0; xi.len() * xi.len()]));
        s.structure = Structure::Position(v);
        s
    }

    /// `K(ξ) + V(x)`.
    pub fn sum(
        dim: usize,
        name: impl Into<String>,
        kinetic: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let k: HalfFn = Arc::new(kinetic);
        let v: HalfFn = Arc::new(potential);
        let (k2, v2) = (k.clone(), v.clone());
        let mut s = SymbolField::new(dim, name, move |x, xi| k2(xi) + v2(x));
        s.structure = Structure::Sum { kinetic: k, potential: v };
        s
    }

    /// `f(x) g(ξ)`.
    pub fn product(
        dim: usize,
        name: impl Into<String>,
        position: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        frequency: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let f: HalfFn = Arc::new(position);
        let g: HalfFn = Arc::new(frequency);
        let (f2, g2) = (f.clone(), g.clone());
        let mut s = SymbolField::new(dim, name, move |x, xi| f2(x) * g2(xi));
        s.structure = Structure::Product { position: f, frequency: g };
        s
    }

    pub fn with_imag(mut self, f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.im = Some(Arc::new(f));
        self.structure = Structure::General;
        self
    }

    pub fn with_grad_x(mut self, f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad_x = Some(Arc::new(f));
        self
    }

    pub fn with_grad_xi(mut self, f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad_xi = Some(Arc::new(f));
        self
    }

    /// Row-major `dim × dim` Hessian in `ξ`.
    pub fn with_hess_xi(mut self, f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hess_xi = Some(Arc::new(f));
        self
    }

    pub fn with_support(mut self, support: PhaseBox) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn support(&self) -> Option<&PhaseBox> {
        self.support.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_none()
    }

    /// Whether `p` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        matches!(self.structure, Structure::Frequency(_))
    }

    /// Real part of the symbol.
    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        (self.re)(x, xi)
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        let im = self.im.as_ref().map_or(0.0, |f| f(x, xi));
        Complex64::new((self.re)(x, xi), im)
    }

    pub fn grad_x(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        match &self.grad_x {
            Some(f) => f(x, xi),
            None => central_gradient(|y| self.value(y, xi), x, FD_STEP),
        }
    }

    pub fn grad_xi(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        match &self.grad_xi {
            Some(f) => f(x, xi),
            None => central_gradient(|e| self.value(x, e), xi, FD_STEP),
        }
    }

    pub fn hess_xi(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        match &self.hess_xi {
            Some(f) => f(x, xi),
            None => central_hessian(|e| self.value(x, e), xi, FD_STEP_HESS),
        }
    }

    /// Pointwise product; keeps the product structure when both factors have it.
    pub fn times(&self, other: &SymbolField) -> SymbolField {
        let name = format!("({})*({})", self.name, other.name);
        if let (Some((f1, g1)), Some((f2, g2))) = (self.as_product(), other.as_product()) {
            return SymbolField::product(self.dim, name, move |x| f1(x) * f2(x), move |xi| g1(xi) * g2(xi));
        }
        let (a, b) = (self.clone(), other.clone());
        SymbolField::new(self.dim, name, move |x, xi| a.value(x, xi) * b.value(x, xi))
    }

    /// The symbol seen as `f(x) g(ξ)` if it has such a form.
    pub fn as_product(&self) -> Option<(HalfFn, HalfFn)> {
        match &self.structure {
            Structure::Product { position, frequency } => Some((position.clone(), frequency.clone())),
            Structure::Frequency(g) => Some((Arc::new(|_: &[f64]| 1.0), g.clone())),
            Structure::Position(v) => Some((v.clone(), Arc::new(|_: &[f64]| 1.0))),
            _ => None,
        }
    }
}

pub(crate) fn central_gradient(f: impl Fn(&[f64]) -> f64, at: &[f64], step: f64) -> Vec<f64> {
    let mut p = at.to_vec();
    (0..at.len())
        .map(|i| {
            let s = step * at[i].abs().max(1.0);
            p[i] = at[i] + s;
            let fp = f(&p);
            p[i] = at[i] - s;
            let fm = f(&p);
            p[i] = at[i];
            (fp - fm) / (2.0 * s)
        })
        .collect()
}

pub(crate) fn central_hessian(f: impl Fn(&[f64]) -> f64, at: &[f64], step: f64) -> Vec<f64> {
    let d = at.len();
    let mut out = vec![0.0; d * d];
    let mut p = at.to_vec();
    let f0 = f(at);
    for i in 0..d {
        let si = step * at[i].abs().max(1.0);
        p[i] = at[i] + si;
        let fp = f(&p);
        p[i] = at[i] - si;
        let fm = f(&p);
        p[i] = at[i];
        out[i * d + i] = (fp - 2.0 * f0 + fm) / (si * si);
        for j in (i + 1)..d {
            let sj = step * at[j].abs().max(1.0);
            let mut val = 0.0;
            for (di, dj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                p[i] = at[i] + di * si;
                p[j] = at[j] + dj * sj;
                val += sign * f(&p);
            }
            p[i] = at[i];
            p[j] = at[j];
            let v = val / (4.0 * si * sj);
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
    out
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum()
}

fn identity_scaled(d: usize, c: f64) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = c;
    }
    m
}

/// Built-in symbols used by the experiments and the CLI.
pub mod builtin {
    use super::*;

    /// `c |ξ|²`.
    pub fn free(dim: usize, c: f64) -> SymbolField {
        SymbolField::frequency(dim, format!("{c}|xi|^2"), move |xi| c * norm_sq(xi))
            .with_grad_xi(move |_, xi| xi.iter().map(|t| 2.0 * c * t).collect())
            .with_hess_xi(move |_, xi| identity_scaled(xi.len(), 2.0 * c))
    }

    /// `|ξ|² - 1`, the round-sphere characteristic set.
    pub fn sphere(dim: usize) -> SymbolField {
        SymbolField::frequency(dim, "|xi|^2-1", |xi| norm_sq(xi) - 1.0)
            .with_grad_xi(|_, xi| xi.iter().map(|t| 2.0 * t).collect())
            .with_hess_xi(|_, xi| identity_scaled(xi.len(), 2.0))
    }

    /// `ξ₁² - ξ₂² - 1`.
    pub fn hyperbola() -> SymbolField {
        SymbolField::frequency(2, "xi1^2-xi2^2-1", |xi| xi[0] * xi[0] - xi[1] * xi[1] - 1.0)
            .with_grad_xi(|_, xi| vec![2.0 * xi[0], -2.0 * xi[1]])
            .with_hess_xi(|_, _| vec![2.0, 0.0, 0.0, -2.0])
    }

    /// `ξ₁² - ξ₂²`, the indefinite dispersion.
    pub fn indefinite() -> SymbolField {
        SymbolField::frequency(2, "xi1^2-xi2^2", |xi| xi[0] * xi[0] - xi[1] * xi[1])
            .with_grad_xi(|_, xi| vec![2.0 * xi[0], -2.0 * xi[1]])
            .with_hess_xi(|_, _| vec![2.0, 0.0, 0.0, -2.0])
    }

    /// `ξ_axis`.
    pub fn coordinate_frequency(dim: usize, axis: usize) -> SymbolField {
        SymbolField::frequency(dim, format!("xi{}", axis + 1), move |xi| xi[axis])
            .with_grad_xi(move |_, xi| {
                let mut g = vec![0.0; xi.len()];
                g[axis] = 1.0;
                g
            })
            .with_hess_xi(|_, xi| vec![0.0; xi.len() * xi.len()])
    }

    /// `ξ_axis²`, degenerate along `axis` where `ξ_axis = 0`.
    pub fn coordinate_square(dim: usize, axis: usize) -> SymbolField {
        SymbolField::frequency(dim, format!("xi{}^2", axis + 1), move |xi| xi[axis] * xi[axis])
            .with_grad_xi(move |_, xi| {
                let mut g = vec![0.0; xi.len()];
                g[axis] = 2.0 * xi[axis];
                g
            })
    }

    /// Constant transport `⟨v, ξ⟩`.
    pub fn transport(v: Vec<f64>) -> SymbolField {
        let dim = v.len();
        let v2 = v.clone();
        SymbolField::frequency(dim, "<v,xi>", move |xi| xi.iter().zip(&v).map(|(a, b)| a * b).sum())
            .with_grad_xi(move |_, _| v2.clone())
            .with_hess_xi(move |_, xi| vec![0.0; xi.len() * xi.len()])
    }

    /// One-dimensional oscillator `ξ² + x² - E`.
    pub fn oscillator(energy: f64) -> SymbolField {
        SymbolField::sum(1, format!("xi^2+x^2-{energy}"), |xi| xi[0] * xi[0], move |x| x[0] * x[0] - energy)
            .with_grad_x(|x, _| vec![2.0 * x[0]])
            .with_grad_xi(|_, xi| vec![2.0 * xi[0]])
            .with_hess_xi(|_, _| vec![2.0])
    }

    /// Pendulum `ξ²/2 + cos x`.
    pub fn pendulum() -> SymbolField {
        SymbolField::sum(1, "xi^2/2+cos(x)", |xi| 0.5 * xi[0] * xi[0], |x| x[0].cos())
            .with_grad_x(|x, _| vec![-x[0].sin()])
            .with_grad_xi(|_, xi| vec![xi[0]])
            .with_hess_xi(|_, _| vec![1.0])
    }

    /// `ξ₁ - a₀(x, ξ₂)` with `a₀ = sin(x₁)/2 + ξ₂²/2`, already affine in `ξ₁`.
    pub fn affine_branch() -> SymbolField {
        SymbolField::new(2, "xi1-(sin(x1)/2+xi2^2/2)", |x, xi| xi[0] - (0.5 * x[0].sin() + 0.5 * xi[1] * xi[1]))
            .with_grad_xi(|_, xi| vec![1.0, -xi[1]])
            .with_grad_x(|x, _| vec![-0.5 * x[0].cos(), 0.0])
            .with_hess_xi(|_, _| vec![0.0, 0.0, 0.0, -1.0])
    }

    /// The closed form of the branch solved by [`affine_branch`].
    pub fn affine_branch_solution(x: &[f64], xi2: f64) -> f64 {
        0.5 * x[0].sin() + 0.5 * xi2 * xi2
    }

    /// Names accepted by [`by_name`].
    pub const NAMES: &[&str] =
        &["sphere", "hyperbola", "indefinite", "flat", "degenerate", "affine", "oscillator", "pendulum", "free"];

    pub fn by_name(name: &str, dim: usize) -> Option<SymbolField> {
        Some(match name {
            "sphere" => sphere(dim),
            "hyperbola" => hyperbola(),
            "indefinite" => indefinite(),
            "flat" => coordinate_frequency(dim, 0),
            "degenerate" => coordinate_square(dim, dim - 1),
            "affine" => affine_branch(),
            "oscillator" => oscillator(1.0),
            "pendulum" => pendulum(),
            "free" => free(dim, 0.5),
            _ => return None,
        })
    }
}
