//! Model quasimode families with known structure: spherical harmonics on S²
//! and S³, Hermite functions of the harmonic oscillator and coherent states.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};
use crate::quantization::quantize_weyl;
use crate::symbol::SymbolField;

/// Minimum rungs for any power-law fit.
pub const MIN_RUNGS: usize = 6;

/// Strictly decreasing semiclassical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HLadder {
    pub values: Vec<f64>,
    pub provenance: String,
}

impl HLadder {
    pub fn new(values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empty h-ladder"));
        }
        if values.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::domain("h values must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::domain("h-ladder must be strictly decreasing"));
        }
        Ok(HLadder { values, provenance: provenance.into() })
    }

    /// `h = 2^{-first}, …, 2^{-(first+count-1)}`.
    pub fn dyadic(first: u32, count: usize) -> Result<Self> {
        let values = (0..count).map(|j| 0.5f64.powi((first as usize + j) as i32)).collect();
        Self::new(values, format!("dyadic 2^-{first}..2^-{}", first as usize + count.saturating_sub(1)))
    }

    /// `h = 1/√(l(l + n_s − 1))` for increasing degrees on `S^{n_s}`.
    pub fn from_degrees(degrees: &[u32], sphere_dim: u32) -> Result<Self> {
        if degrees.iter().any(|&l| l == 0) {
            return Err(Error::domain("degrees must be at least 1"));
        }
        let values = degrees.iter().map(|&l| sphere_h(l, sphere_dim)).collect();
        let list: Vec<String> = degrees.iter().map(u32::to_string).collect();
        Self::new(values, format!("S^{sphere_dim} degrees {}", list.join(",")))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn require_fit(&self) -> Result<()> {
        if self.values.len() < MIN_RUNGS {
            return Err(Error::domain(format!("{} rungs, a fit needs at least {MIN_RUNGS}", self.values.len())));
        }
        Ok(())
    }
}

/// `h` with `h² Δ u = u` for degree `l` on `S^{n_s}`.
pub fn sphere_h(l: u32, sphere_dim: u32) -> f64 {
    let l = l as f64;
    1.0 / (l * (l + sphere_dim as f64 - 1.0)).sqrt()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(n, z);
            dp = n as f64 * (z * p - p_prev) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (p, p_prev) = legendre_pair(n, z);
        dp = if p.is_finite() { n as f64 * (z * p - p_prev) / (z * z - 1.0) } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(t), P_{n-1}(t))` by the three-term recurrence.
fn legendre_pair(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Legendre polynomial `P_l(t)`.
pub fn legendre(l: u32, t: f64) -> f64 {
    legendre_pair(l as usize, t).0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicKind {
    Zonal,
    HighestWeight,
}

/// An L²-normalised spherical harmonic, evaluated at unit vectors of
/// `ℝ^{n_s+1}`. Zonal harmonics are symmetric about the last axis;
/// the highest weight harmonic is `c_l (x + iy)^l` on S².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereHarmonic {
    pub degree: u32,
    pub kind: HarmonicKind,
    pub sphere_dim: u32,
    /// `log` of the normalising constant.
    pub log_norm_const: f64,
}

impl SphereHarmonic {
    pub fn zonal(l: u32, sphere_dim: u32) -> Result<Self> {
        if l < 1 {
            return Err(Error::domain("degree must be at least 1"));
        }
        let mass = match sphere_dim {
            // 2π ∫ P_l(t)² dt, exact for degree 2l
            2 => {
                let (t, w) = gauss_legendre(l as usize + 2);
                2.0 * PI * t.iter().zip(&w).map(|(&t, &w)| w * legendre(l, t).powi(2)).sum::<f64>()
            }
            // 4π ∫ sin²((l+1)θ) dθ, trapezoid is exact for this trigonometric polynomial
            3 => {
                let m = 4 * (l as usize + 2);
                let s: f64 = (0..m).map(|j| ((l as f64 + 1.0) * PI * j as f64 / m as f64).sin().powi(2)).sum();
                4.0 * PI * s * PI / m as f64
            }
            _ => return Err(Error::domain(format!("zonal harmonics on S^{sphere_dim} are not provided"))),
        };
        Ok(SphereHarmonic { degree: l, kind: HarmonicKind::Zonal, sphere_dim, log_norm_const: -0.5 * mass.ln() })
    }

    pub fn highest_weight(l: u32) -> Result<Self> {
        if l < 1 {
            return Err(Error::domain("degree must be at least 1"));
        }
        // ‖(x+iy)^l‖² = 2π ∫ (1 − t²)^l dt, exact for l + 1 Gauss nodes
        let (t, w) = gauss_legendre(l as usize + 1);
        let terms: Vec<f64> = t.iter().zip(&w).map(|(&t, &w)| w.ln() + l as f64 * (1.0 - t * t).ln()).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_int = top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
        let log_mass = (2.0 * PI).ln() + log_int;
        Ok(SphereHarmonic { degree: l, kind: HarmonicKind::HighestWeight, sphere_dim: 2, log_norm_const: -0.5 * log_mass })
    }

    pub fn h(&self) -> f64 {
        sphere_h(self.degree, self.sphere_dim)
    }

    pub fn norm_const(&self) -> f64 {
        self.log_norm_const.exp()
    }

    /// Exact eigenvalue defect `|h² l(l + n_s − 1) − 1|`.
    pub fn eigen_defect(&self) -> f64 {
        let l = self.degree as f64;
        (self.h().powi(2) * l * (l + self.sphere_dim as f64 - 1.0) - 1.0).abs()
    }

    pub fn eval(&self, point: &[f64]) -> Complex64 {
        let l = self.degree;
        match (self.kind, self.sphere_dim) {
            (HarmonicKind::Zonal, 2) => Complex64::new(self.norm_const() * legendre(l, point[2].clamp(-1.0, 1.0)), 0.0),
            (HarmonicKind::Zonal, _) => {
                let c = point[3].clamp(-1.0, 1.0);
                let theta = c.acos();
                let s = theta.sin();
                let lf = l as f64 + 1.0;
                let v = if s < 1e-12 {
                    // limit (l + 1) cos(θ)^l at the poles
                    lf * if c > 0.0 || l % 2 == 0 { 1.0 } else { -1.0 }
                } else {
                    (lf * theta).sin() / s
                };
                Complex64::new(self.norm_const() * v, 0.0)
            }
            (HarmonicKind::HighestWeight, _) => {
                let r = point[0].hypot(point[1]);
                if r == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let phi = point[1].atan2(point[0]);
                let modulus = (self.log_norm_const + l as f64 * r.ln()).exp();
                Complex64::from_polar(modulus, l as f64 * phi)
            }
        }
    }

    /// Mass within angular distance `width` of the equator `{x₃ = 0}`.
    pub fn equatorial_mass(&self, width: f64) -> f64 {
        let l = self.degree;
        let s = width.sin().min(1.0);
        let nodes = (l as usize + 2).max(64);
        let (t, w) = gauss_legendre(nodes);
        let c2 = (2.0 * self.log_norm_const).exp();
        let integrand = |t: f64| -> f64 {
            match (self.kind, self.sphere_dim) {
                (HarmonicKind::HighestWeight, _) => (2.0 * self.log_norm_const + l as f64 * (1.0 - t * t).ln()).exp(),
                (HarmonicKind::Zonal, 2) => c2 * legendre(l, t).powi(2),
                _ => f64::NAN,
            }
        };
        2.0 * PI * s * t.iter().zip(&w).map(|(&t, &w)| w * integrand(s * t)).sum::<f64>()
    }
}

/// Closed form `√((2l+1)/4π)` of the zonal sup norm on S².
pub fn zonal_sup_s2(l: u32) -> f64 {
    ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt()
}

/// Values of the zonal harmonic along `samples`, which must be a closed
/// great circle sampled at no fewer than `10 l` points.
pub fn zonal(l: u32, sphere_dim: u32, samples: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    check_circle_resolution(l, samples.len())?;
    let y = SphereHarmonic::zonal(l, sphere_dim)?;
    Ok(samples.iter().map(|p| y.eval(p)).collect())
}

/// As [`zonal`] for the highest weight harmonic on S².
pub fn highest_weight(l: u32, samples: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    check_circle_resolution(l, samples.len())?;
    let y = SphereHarmonic::highest_weight(l)?;
    Ok(samples.iter().map(|p| y.eval(p)).collect())
}

fn check_circle_resolution(l: u32, nodes: usize) -> Result<()> {
    if nodes < 10 * l as usize {
        return Err(Error::Resolution(format!("{nodes} samples on a great circle for degree {l}, need {}", 10 * l)));
    }
    Ok(())
}

/// Values of the normalised Hermite function `ψ_k(y)`, computed with a
/// running log scale so that large `k` and `|y|` neither overflow nor underflow.
pub fn hermite_function(k: usize, y: f64) -> f64 {
    let mut log_scale = -0.5 * y * y - 0.25 * PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..k {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * y * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            prev /= m;
            cur /= m;
            log_scale += m.ln();
        }
    }
    if cur == 0.0 {
        return 0.0;
    }
    cur.signum() * (cur.abs().ln() + log_scale).exp()
}

/// Eigenfunction of `h²D² + x²` with eigenvalue `E_k = (2k+1)h`.
pub fn oscillator_mode(k: usize, h: f64, grid: &PeriodicGrid) -> Result<GridFunction> {
    if grid.dim != 1 {
        return Err(Error::Dimension("oscillator modes are one-dimensional".into()));
    }
    let energy = (2.0 * k as f64 + 1.0) * h;
    let reach = energy.sqrt() + 6.0 * h.sqrt();
    if 0.5 * grid.period < reach {
        return Err(Error::DomainSize(format!(
            "half-period {} below turning point plus six widths {reach:.4}",
            0.5 * grid.period
        )));
    }
    if grid.nyquist(h) < reach {
        return Err(Error::Resolution(format!("Nyquist {} below {reach:.4}", grid.nyquist(h))));
    }
    let scale = h.powf(-0.25);
    let sh = h.sqrt();
    let u = GridFunction::from_fn(*grid, h, |x| Complex64::new(scale * hermite_function(k, x[0] / sh), 0.0));
    let peak = u.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = u.values[0].norm().max(u.values[grid.len() - 1].norm());
    if edge > 1e-8 * peak {
        return Err(Error::DomainSize(format!("tail {:.3e} at the seam", edge / peak)));
    }
    Ok(u.normalized())
}

/// `(πh)^{-n/4} e^{i⟨x,ξ₀⟩/h} e^{-|x−x₀|²/2h}`, normalised on the grid.
pub fn coherent_state(x0: &[f64], xi0: &[f64], h: f64, grid: &PeriodicGrid) -> Result<GridFunction> {
    let n = grid.dim;
    if x0.len() != n || xi0.len() != n {
        return Err(Error::Dimension(format!("centre does not match grid dimension {n}")));
    }
    let half = 0.5 * grid.period;
    let mut leak = 0.0;
    for &c in x0 {
        // Gaussian tail bound on the mass beyond each seam
        let (lo, hi) = (c + half, half - c);
        if lo <= 0.0 || hi <= 0.0 {
            return Err(Error::Placement(format!("centre {c} outside the grid")));
        }
        leak += (-lo * lo / h).exp() + (-hi * hi / h).exp();
    }
    if leak > 1e-10 {
        return Err(Error::Placement(format!("mass {leak:.3e} leaks past the periodic seam")));
    }
    let reach = xi0.iter().map(|t| t.abs()).fold(0.0, f64::max) + 5.0 * h.sqrt();
    if reach > grid.nyquist(h) {
        return Err(Error::Resolution(format!(
            "frequency reach {reach:.4} exceeds Nyquist {:.4}",
            grid.nyquist(h)
        )));
    }
    let amp = (PI * h).powf(-(n as f64) / 4.0);
    let u = GridFunction::from_fn(*grid, h, |x| {
        let phase: f64 = x.iter().zip(xi0).map(|(a, b)| a * b).sum::<f64>() / h;
        let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
        Complex64::from_polar(amp * (-r2 / (2.0 * h)).exp(), phase)
    });
    Ok(u.normalized())
}

/// `‖p^w(x,hD)u‖`.
pub fn quasimode_defect(sym: &SymbolField, u: &GridFunction) -> Result<f64> {
    Ok(quantize_weyl(sym, u.h, u)?.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_validation() {
        assert!(HLadder::new(vec![0.1, 0.1], "x").is_err());
        assert!(HLadder::new(vec![0.1, 0.2], "x").is_err());
        let d = HLadder::dyadic(3, 6).unwrap();
        assert_eq!(d.values[0], 0.125);
        assert!(d.require_fit().is_ok());
        assert!(HLadder::dyadic(3, 5).unwrap().require_fit().is_err());
        let s = HLadder::from_degrees(&[1, 2], 2).unwrap();
        assert!((s.values[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((int - 2.0 / 13.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(3000);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn legendre_endpoint_and_zonal_peak() {
        assert_eq!(legendre(37, 1.0), 1.0);
        let y = SphereHarmonic::zonal(100, 2).unwrap();
        assert!((y.eval(&[0.0, 0.0, 1.0]).re - zonal_sup_s2(100)).abs() < 1e-10);
        assert!((zonal_sup_s2(100) - 3.9993).abs() < 1e-3);
    }

    #[test]
    fn s3_zonal_normalisation() {
        let y = SphereHarmonic::zonal(10, 3).unwrap();
        assert!((y.norm_const() - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-13);
        assert!((y.eval(&[0.0, 0.0, 0.0, 1.0]).re - 11.0 * y.norm_const()).abs() < 1e-12);
    }

    #[test]
    fn highest_weight_constant_matches_beta_integral() {
        for &l in &[1u32, 7, 256, 1500] {
            let y = SphereHarmonic::highest_weight(l).unwrap();
            // ∫(1−t²)^l dt = 2 ∏_{j≤l} 2j/(2j+1)
            let log_int = 2f64.ln() + (1..=l).map(|j| (2.0 * j as f64 / (2.0 * j as f64 + 1.0)).ln()).sum::<f64>();
            let expect = -0.5 * ((2.0 * PI).ln() + log_int);
            assert!((y.log_norm_const - expect).abs() < 1e-10, "l = {l}");
        }
    }

    #[test]
    fn highest_weight_concentrates_on_the_equator() {
        let l = 400;
        let y = SphereHarmonic::highest_weight(l).unwrap();
        let m = y.equatorial_mass(3.0 / (l as f64).sqrt());
        assert!(m >= 0.95 && m <= 1.0 + 1e-9, "{m}");
        assert!((y.equatorial_mass(PI / 2.0) - 1.0).abs() < 1e-10);
        let a = y.eval(&[1.0, 0.0, 0.0]).norm();
        let b = y.eval(&[0.6, -0.8, 0.0]).norm();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let grid = PeriodicGrid::new(1, 1024, 16.0).unwrap();
        let h = 1.0 / 64.0;
        let modes: Vec<GridFunction> = [0usize, 1, 2, 25, 26].iter().map(|&k| oscillator_mode(k, h, &grid).unwrap()).collect();
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let ip = a.inner(b).norm();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8);
            }
        }
        let g = &modes[0];
        let j = grid.origin_index();
        assert!((g.values[j].re - (PI * h).powf(-0.25)).abs() < 1e-8);
    }

    #[test]
    fn large_index_hermite_is_finite() {
        let v = hermite_function(3000, 70.0);
        assert!(v.is_finite());
        assert!(hermite_function(3000, 100.0).abs() < 1e-100);
    }

    #[test]
    fn coherent_state_peak_and_placement() {
        let grid = PeriodicGrid::new(2, 128, 8.0).unwrap();
        let h = 1.0 / 32.0;
        let u = coherent_state(&[0.0, 0.0], &[0.5, -0.25], h, &grid).unwrap();
        assert!((u.l2_norm() - 1.0).abs() < 1e-10);
        let peak = u.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((peak - (PI * h).powf(-0.5)).abs() < 1e-8 * peak);
        assert!(matches!(coherent_state(&[3.8, 0.0], &[0.0, 0.0], h, &grid), Err(Error::Placement(_))));
    }
}
