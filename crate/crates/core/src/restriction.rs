//! Restriction of functions to submanifolds and the norms of the result.
//!
//! Curves on spheres carry trapezoid quadrature in arc length. Slices of a
//! periodic grid either hit grid nodes exactly or use trigonometric
//! interpolation along the fixed axes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Lp;
use crate::grid::{GridFunction, PeriodicGrid};
use crate::harmonics::SphereHarmonic;

/// Minimum quadrature nodes per wavelength `2πh` on curves.
pub const NODES_PER_WAVELENGTH: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubmanifoldKind {
    /// Grid coordinates `axis = value` held fixed.
    CoordinateSlice { fixed: Vec<(usize, f64)> },
    /// Closed lattice line through the grid origin along an integer direction,
    /// optionally cut to `|s| ≤ half_length`.
    LatticeLine { direction: Vec<i64>, half_length: Option<f64> },
    /// Single grid point.
    Point { at: Vec<f64> },
    /// `s ↦ (cos s, sin s cos α, sin s sin α)` on S²; `α = π/2` passes the poles.
    GreatCircle { inclination: f64 },
    /// `s ↦ (cos s, sin s cos α, 0, sin s sin α)` on S³.
    GeodesicS3 { inclination: f64 },
}

/// Interpolation weights over one grid axis.
type AxisWeights = Vec<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Submanifold {
    pub kind: SubmanifoldKind,
    /// Intrinsic dimension `k`.
    pub dim: usize,
    /// Dimension of the ambient geometry.
    pub ambient_dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    grid: Option<PeriodicGrid>,
    /// Flat grid index per node when nodes are grid points.
    grid_indices: Option<Vec<usize>>,
    /// For interpolated slices: free axes and per-fixed-axis weights.
    slice_weights: Option<(Vec<usize>, Vec<(usize, AxisWeights)>)>,
}

fn trapezoid_circle(nodes: usize, embed: impl Fn(f64) -> Vec<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let ds = 2.0 * PI / nodes as f64;
    let pts = (0..nodes).map(|j| embed(j as f64 * ds)).collect();
    (pts, vec![ds; nodes])
}

/// Weights `w_i` with `f(t) = Σ w_i f(x_i)` for trigonometric polynomials
/// sampled on an axis of the grid.
pub fn trig_interp_weights(grid: &PeriodicGrid, t: f64) -> AxisWeights {
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let exact = (t - grid.coordinate(0)) / h;
    if (exact - exact.round()).abs() < 1e-12 {
        let mut w = vec![0.0; n];
        w[(exact.round() as i64).rem_euclid(n as i64) as usize] = 1.0;
        return w;
    }
    // periodic sinc for even N, with the Nyquist mode split symmetrically
    (0..n)
        .map(|i| {
            let d = PI * (t - grid.coordinate(i)) / grid.period;
            (n as f64 * d).sin() / (n as f64 * d.tan())
        })
        .collect()
}

impl Submanifold {
    pub fn great_circle(inclination: f64, nodes: usize) -> Result<Self> {
        check_nodes(nodes)?;
        let (c, s) = (inclination.cos(), inclination.sin());
        let (pts, w) = trapezoid_circle(nodes, |t| vec![t.cos(), t.sin() * c, t.sin() * s]);
        Ok(Submanifold::curve(SubmanifoldKind::GreatCircle { inclination }, 2, pts, w))
    }

    pub fn geodesic_s3(inclination: f64, nodes: usize) -> Result<Self> {
        check_nodes(nodes)?;
        let (c, s) = (inclination.cos(), inclination.sin());
        let (pts, w) = trapezoid_circle(nodes, |t| vec![t.cos(), t.sin() * c, 0.0, t.sin() * s]);
        Ok(Submanifold::curve(SubmanifoldKind::GeodesicS3 { inclination }, 3, pts, w))
    }

    fn curve(kind: SubmanifoldKind, ambient: usize, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        Submanifold {
            kind,
            dim: 1,
            ambient_dim: ambient,
            nodes,
            weights,
            grid: None,
            grid_indices: None,
            slice_weights: None,
        }
    }

    pub fn coordinate_slice(grid: &PeriodicGrid, fixed: &[(usize, f64)]) -> Result<Self> {
        let n = grid.dim;
        if fixed.is_empty() || fixed.len() >= n + 1 {
            return Err(Error::Dimension(format!("fix between 1 and {n} axes")));
        }
        let mut seen = vec![false; n];
        for &(a, _) in fixed {
            if a >= n || seen[a] {
                return Err(Error::Dimension(format!("bad fixed axis {a}")));
            }
            seen[a] = true;
        }
        let free: Vec<usize> = (0..n).filter(|a| !seen[*a]).collect();
        let k = free.len();
        let per = grid.points_per_axis;
        let count = per.pow(k as u32);
        let weights_axis: Vec<(usize, AxisWeights)> = fixed.iter().map(|&(a, v)| (a, trig_interp_weights(grid, v))).collect();
        let exact: Option<Vec<usize>> = weights_axis
            .iter()
            .map(|(_, w)| w.iter().position(|&x| x == 1.0).filter(|_| w.iter().filter(|&&x| x != 0.0).count() == 1))
            .collect();
        let mut nodes = Vec::with_capacity(count);
        let mut indices = Vec::with_capacity(count);
        for f in 0..count {
            let mut idx = vec![0usize; n];
            let mut rest = f;
            for &a in free.iter().rev() {
                idx[a] = rest % per;
                rest /= per;
            }
            let mut x = vec![0.0; n];
            for &a in &free {
                x[a] = grid.coordinate(idx[a]);
            }
            for (j, &(a, v)) in fixed.iter().enumerate() {
                x[a] = v;
                if let Some(e) = &exact {
                    idx[a] = e[j];
                }
            }
            nodes.push(x);
            indices.push(grid.flat_index(&idx));
        }
        let w = grid.spacing().powi(k as i32);
        let interpolated = exact.is_none();
        Ok(Submanifold {
            kind: SubmanifoldKind::CoordinateSlice { fixed: fixed.to_vec() },
            dim: k,
            ambient_dim: n,
            nodes,
            weights: vec![w; count],
            grid: Some(*grid),
            grid_indices: if interpolated { None } else { Some(indices) },
            slice_weights: if interpolated { Some((free, weights_axis)) } else { None },
        })
    }

    pub fn lattice_line(grid: &PeriodicGrid, direction: &[i64], half_length: Option<f64>) -> Result<Self> {
        if direction.len() != grid.dim || direction.iter().all(|&d| d == 0) {
            return Err(Error::Dimension("direction must be a non-zero lattice vector of the grid dimension".into()));
        }
        let per = grid.points_per_axis as i64;
        let g = direction.iter().fold(0i64, |acc, &d| gcd(acc, d.abs()));
        let dir: Vec<i64> = direction.iter().map(|d| d / g).collect();
        let step = grid.spacing() * (dir.iter().map(|d| (d * d) as f64).sum::<f64>()).sqrt();
        let o = grid.origin_index() as i64;
        let mut nodes = Vec::new();
        let mut indices = Vec::new();
        let mut params = Vec::new();
        for s in -(per / 2)..(per / 2) {
            let r = s as f64 * step;
            if let Some(hl) = half_length {
                if r.abs() > hl + 1e-12 {
                    continue;
                }
            }
            let idx: Vec<usize> = dir.iter().map(|d| (o + s * d).rem_euclid(per) as usize).collect();
            let flat = grid.flat_index(&idx);
            if indices.contains(&flat) {
                break;
            }
            nodes.push(dir.iter().map(|&d| s as f64 * d as f64 * grid.spacing()).collect());
            indices.push(flat);
            params.push(r);
        }
        let count = nodes.len();
        Ok(Submanifold {
            kind: SubmanifoldKind::LatticeLine { direction: dir, half_length },
            dim: 1,
            ambient_dim: grid.dim,
            nodes,
            weights: vec![step; count],
            grid: Some(*grid),
            grid_indices: Some(indices),
            slice_weights: None,
        })
    }

    pub fn point(grid: &PeriodicGrid, at: &[f64]) -> Result<Self> {
        if at.len() != grid.dim {
            return Err(Error::Dimension("point does not match the grid dimension".into()));
        }
        let mut idx = Vec::with_capacity(at.len());
        for &t in at {
            let j = (t - grid.coordinate(0)) / grid.spacing();
            if (j - j.round()).abs() > 1e-9 || j.round() < 0.0 || j.round() >= grid.points_per_axis as f64 {
                return Err(Error::Placement(format!("{t} is not a grid node")));
            }
            idx.push(j.round() as usize);
        }
        Ok(Submanifold {
            kind: SubmanifoldKind::Point { at: at.to_vec() },
            dim: 0,
            ambient_dim: grid.dim,
            nodes: vec![at.to_vec()],
            weights: vec![1.0],
            grid: Some(*grid),
            grid_indices: Some(vec![grid.flat_index(&idx)]),
            slice_weights: None,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Flat grid indices of the nodes, when they are grid points.
    pub fn grid_indices(&self) -> Option<&[usize]> {
        self.grid_indices.as_deref()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nodes per wavelength `2πh` along a curve.
    pub fn nodes_per_wavelength(&self, h: f64) -> f64 {
        let spacing = self.measure() / self.len() as f64;
        2.0 * PI * h / spacing
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 4 {
        return Err(Error::Resolution(format!("{nodes} nodes on a closed curve")));
    }
    Ok(())
}

/// Restricted values with their quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionSample {
    pub values: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl RestrictionSample {
    pub fn new(values: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Dimension("values and weights differ in length".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Data("non-finite restricted value".into()));
        }
        Ok(RestrictionSample { values, weights })
    }

    pub fn lp_norm(&self, p: Lp) -> f64 {
        lp_norm(self, p)
    }
}

/// `(Σ w_i |v_i|^p)^{1/p}`, or `max |v_i|` for `p = ∞`.
pub fn lp_norm(s: &RestrictionSample, p: Lp) -> f64 {
    if p.is_infinite() {
        return s.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let p = p.to_f64();
    let top = s.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    // scale by the max to keep large p finite
    let sum: f64 = s.values.iter().zip(&s.weights).map(|(v, w)| w * (v.norm() / top).powf(p)).sum();
    top * sum.powf(1.0 / p)
}

/// Restriction of a grid function to a grid submanifold.
pub fn restrict(u: &GridFunction, y: &Submanifold) -> Result<RestrictionSample> {
    match y.grid {
        Some(g) if g == u.grid => {}
        _ => return Err(Error::Dimension("submanifold is not defined on this grid".into())),
    }
    if let Some(idx) = &y.grid_indices {
        return RestrictionSample::new(idx.iter().map(|&i| u.values[i]).collect(), y.weights.clone());
    }
    let (free, axis_w) = y.slice_weights.as_ref().ok_or_else(|| Error::Data("slice without nodes".into()))?;
    let grid = u.grid;
    let per = grid.points_per_axis;
    let count = y.len();
    let fixed_count = per.pow(axis_w.len() as u32);
    let mut values = Vec::with_capacity(count);
    for f in 0..count {
        let mut idx = vec![0usize; grid.dim];
        let mut rest = f;
        for &a in free.iter().rev() {
            idx[a] = rest % per;
            rest /= per;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for g in 0..fixed_count {
            let mut rest = g;
            let mut w = 1.0;
            for (a, weights) in axis_w.iter().rev() {
                idx[*a] = rest % per;
                rest /= per;
                w *= weights[idx[*a]];
            }
            if w != 0.0 {
                acc += u.values[grid.flat_index(&idx)] * w;
            }
        }
        values.push(acc);
    }
    RestrictionSample::new(values, y.weights.clone())
}

/// Restriction of a sphere harmonic to a curve, checking the node density.
pub fn restrict_harmonic(y: &SphereHarmonic, curve: &Submanifold) -> Result<RestrictionSample> {
    let ok_kind = matches!(
        (&curve.kind, y.sphere_dim),
        (SubmanifoldKind::GreatCircle { .. }, 2) | (SubmanifoldKind::GeodesicS3 { .. }, 3)
    );
    if !ok_kind {
        return Err(Error::Dimension("curve does not lie on the harmonic's sphere".into()));
    }
    let density = curve.nodes_per_wavelength(y.h());
    if density < NODES_PER_WAVELENGTH {
        return Err(Error::Resolution(format!(
            "{density:.2} nodes per wavelength at degree {}, need {NODES_PER_WAVELENGTH}",
            y.degree
        )));
    }
    RestrictionSample::new(curve.nodes.iter().map(|p| y.eval(p)).collect(), curve.weights.clone())
}

/// Restriction to a coordinate slice as a function on the lower-dimensional grid.
pub fn slice_function(u: &GridFunction, y: &Submanifold) -> Result<GridFunction> {
    if !matches!(y.kind, SubmanifoldKind::CoordinateSlice { .. }) || y.dim == 0 {
        return Err(Error::Dimension("need a coordinate slice of positive dimension".into()));
    }
    let s = restrict(u, y)?;
    let grid = PeriodicGrid::new(y.dim, u.grid.points_per_axis, u.grid.period)?;
    GridFunction::new(grid, s.values, u.h)
}

/// `sup_z ‖u(·, z)‖_{L²_y}` for a partition of the grid axes into `y` and `z`.
pub fn mixed_norm(u: &GridFunction, y_axes: &[usize], z_axes: &[usize]) -> Result<f64> {
    let n = u.grid.dim;
    let mut seen = vec![0; n];
    for &a in y_axes.iter().chain(z_axes) {
        if a >= n {
            return Err(Error::Dimension(format!("axis {a} out of range")));
        }
        seen[a] += 1;
    }
    if seen.iter().any(|&c| c != 1) || y_axes.is_empty() {
        return Err(Error::Dimension("axes must partition the grid dimensions with y non-empty".into()));
    }
    let per = u.grid.points_per_axis;
    let mut slices = vec![0.0; per.pow(z_axes.len() as u32)];
    for (flat, v) in u.values.iter().enumerate() {
        let idx = u.grid.multi_index(flat);
        let key = z_axes.iter().fold(0, |acc, &a| acc * per + idx[a]);
        slices[key] += v.norm_sqr();
    }
    let w = u.grid.spacing().powi(y_axes.len() as i32);
    Ok((slices.into_iter().fold(0.0, f64::max) * w).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::legendre;

    #[test]
    fn constant_and_unimodular_norms() {
        let s = RestrictionSample::new(vec![Complex64::new(1.0, 0.0); 10], vec![0.1; 10]).unwrap();
        for p in [Lp::int(1), Lp::int(3), Lp::Infinity] {
            assert!((lp_norm(&s, p) - 1.0).abs() < 1e-14);
        }
        let c = Submanifold::great_circle(0.3, 64).unwrap();
        let v: Vec<Complex64> = (0..64).map(|j| Complex64::from_polar(1.0, j as f64)).collect();
        let s = RestrictionSample::new(v, c.weights.clone()).unwrap();
        assert!((lp_norm(&s, Lp::int(4)) - (2.0 * PI).powf(0.25)).abs() < 1e-13);
    }

    #[test]
    fn grid_slice_of_plane_wave() {
        let grid = PeriodicGrid::new(2, 32, 2.0 * PI).unwrap();
        let h = 0.1;
        let u = GridFunction::from_fn(grid, h, |x| Complex64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1]));
        let y = Submanifold::coordinate_slice(&grid, &[(1, 0.0)]).unwrap();
        let f = slice_function(&u, &y).unwrap();
        for (j, v) in f.values.iter().enumerate() {
            assert!((v - Complex64::from_polar(1.0, 3.0 * grid.coordinate(j))).norm() < 1e-14);
        }
        // off-grid slice by trigonometric interpolation is exact for lattice waves
        let y = Submanifold::coordinate_slice(&grid, &[(1, 0.123)]).unwrap();
        assert!(y.grid_indices().is_none());
        let s = restrict(&u, &y).unwrap();
        for (j, v) in s.values.iter().enumerate() {
            assert!((v - Complex64::from_polar(1.0, 3.0 * grid.coordinate(j) - 0.246)).norm() < 1e-12);
        }
    }

    #[test]
    fn zonal_on_polar_circle_matches_legendre() {
        let l = 50;
        let y = SphereHarmonic::zonal(l, 2).unwrap();
        let c = Submanifold::great_circle(PI / 2.0, 1024).unwrap();
        let s = restrict_harmonic(&y, &c).unwrap();
        for (j, v) in s.values.iter().enumerate() {
            let theta = 2.0 * PI * j as f64 / 1024.0;
            // the polar circle has x₃ = sin s
            let expect = y.norm_const() * legendre(l, theta.sin());
            assert!((v.re - expect).abs() < 1e-10);
        }
        assert!(matches!(restrict_harmonic(&y, &Submanifold::great_circle(0.0, 256).unwrap()), Err(Error::Resolution(_))));
    }

    #[test]
    fn highest_weight_equator_norm() {
        let l = 256;
        let y = SphereHarmonic::highest_weight(l).unwrap();
        let c = Submanifold::great_circle(0.0, 4096).unwrap();
        let s = restrict_harmonic(&y, &c).unwrap();
        assert!((lp_norm(&s, Lp::int(2)) - y.norm_const() * (2.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn lattice_line_and_point() {
        let grid = PeriodicGrid::new(2, 16, 4.0).unwrap();
        let line = Submanifold::lattice_line(&grid, &[2, 2], None).unwrap();
        assert_eq!(line.len(), 16);
        assert!((line.measure() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        let seg = Submanifold::lattice_line(&grid, &[1, 1], Some(1.0)).unwrap();
        assert!(seg.nodes.iter().all(|p| p[0] == p[1] && p[0].abs() <= 1.0));
        let p = Submanifold::point(&grid, &[0.0, 0.5]).unwrap();
        let u = GridFunction::from_fn(grid, 0.1, |x| Complex64::new(x[0] + 2.0 * x[1], 0.0));
        assert_eq!(restrict(&u, &p).unwrap().values[0].re, 1.0);
        assert!(Submanifold::point(&grid, &[0.1, 0.0]).is_err());
    }

    #[test]
    fn mixed_norm_of_separable_function() {
        let grid = PeriodicGrid::new(2, 32, 2.0 * PI).unwrap();
        let f = |y: f64| (-y * y).exp();
        let g = |z: f64| 1.0 + 0.5 * z.cos();
        let u = GridFunction::from_fn(grid, 0.1, |x| Complex64::new(f(x[0]) * g(x[1]), 0.0));
        let fnorm: f64 = (0..32).map(|j| f(grid.coordinate(j)).powi(2)).sum::<f64>() * grid.spacing();
        let sup_g = (0..32).map(|j| g(grid.coordinate(j)).abs()).fold(0.0, f64::max);
        let m = mixed_norm(&u, &[0], &[1]).unwrap();
        assert!((m - fnorm.sqrt() * sup_g).abs() < 1e-12);
        assert!(mixed_norm(&u, &[0], &[0]).is_err());
    }
}
