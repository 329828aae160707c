//! Periodic grids, grid functions and the n-dimensional FFT used by the
//! quantisation and propagation code.
//!
//! A grid of `N` points per axis on `[-L/2, L/2)^dim` is stored row-major
//! with the last axis fastest. Point `j` on an axis sits at `-L/2 + jL/N`, so
//! the origin is index `N/2`. The dual lattice is `κ_m = 2π m / L` in FFT
//! order; the semiclassical frequency at scale `h` is `ξ = h κ`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
}

impl PeriodicGrid {
    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(format!("grid dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 2 || !points_per_axis.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "points per axis {points_per_axis} must be a power of two >= 2"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::domain(format!("period {period} must be positive")));
        }
        Ok(PeriodicGrid { dim, points_per_axis, period })
    }

    /// `[-π, π)^dim`.
    pub fn standard(dim: usize, points_per_axis: usize) -> Result<Self> {
        Self::new(dim, points_per_axis, 2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points_per_axis as f64
    }

    /// Quadrature weight of each grid point, `(L/N)^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.period + j as f64 * self.spacing()
    }

    /// Signed integer frequency for FFT slot `m`.
    pub fn frequency_index(&self, m: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular wave number `κ_m = 2π m / L`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * self.frequency_index(m) as f64 / self.period
    }

    /// Largest resolved semiclassical frequency `π N h / L`.
    pub fn nyquist(&self, h: f64) -> f64 {
        PI * self.points_per_axis as f64 * h / self.period
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let n = self.points_per_axis;
        let mut idx = vec![0; self.dim];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|j| self.coordinate(j)).collect()
    }

    /// Semiclassical frequency vector `h κ` at FFT slot `flat`.
    pub fn frequency(&self, flat: usize, h: f64) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|m| h * self.wavenumber(m)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn frequencies(&self, h: f64) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.frequency(i, h)).collect()
    }

    /// Index of the grid point nearest the origin on each axis.
    pub fn origin_index(&self) -> usize {
        self.points_per_axis / 2
    }
}

/// Complex samples on a periodic grid, tagged with the semiclassical `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: PeriodicGrid,
    pub values: Vec<Complex64>,
    pub h: f64,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<Complex64>, h: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if !(h > 0.0) {
            return Err(Error::domain(format!("h = {h} must be positive")));
        }
        Ok(GridFunction { grid, values, h })
    }

    pub fn zeros(grid: PeriodicGrid, h: f64) -> Self {
        GridFunction { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()], h }
    }

    pub fn from_fn(grid: PeriodicGrid, h: f64, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFunction { grid, values, h }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Grid-quadrature `L^p` norm; `p = ∞` is the maximum modulus.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_volume()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.l2_norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid, values, h: self.h })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction { grid: self.grid, values, h: self.h })
    }

    pub fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("grid functions live on different grids".into()));
        }
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(Error::Dimension(format!("h mismatch: {} vs {}", self.h, other.h)));
        }
        Ok(())
    }

    /// Unnormalised forward DFT of the values.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        fft_nd(&mut v, &self.grid, Direction::Forward);
        v
    }

    /// Inverse of [`GridFunction::spectrum`].
    pub fn from_spectrum(grid: PeriodicGrid, h: f64, mut spectrum: Vec<Complex64>) -> Self {
        fft_nd(&mut spectrum, &grid, Direction::Inverse);
        GridFunction { grid, values: spectrum, h }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    /// Normalised so that inverse(forward(v)) = v.
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        }
    })
}

/// In-place FFT over every axis of a row-major grid array.
pub fn fft_nd(values: &mut [Complex64], grid: &PeriodicGrid, direction: Direction) {
    let n = grid.points_per_axis;
    let fft = plan(n, direction);
    let total = values.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in values.chunks_mut(n) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = values[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, slot) in line.iter().enumerate() {
                    values[start + i * stride] = *slot;
                }
            }
        }
    }
    if direction == Direction::Inverse {
        let scale = 1.0 / total as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }
}
