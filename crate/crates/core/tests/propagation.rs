use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use quasirest::fit::least_squares;
use quasirest::grid::{GridFunction, PeriodicGrid};
use quasirest::harmonics::coherent_state;
use quasirest::propagator::{
    apply_parametrix, duhamel_solve, fit_kernel_exponents, reference_propagator, restricted_kernel_decay, solve_eikonal,
    EikonalOptions, HamiltonianFlow, KernelConfig, KernelEstimate, KernelRow, ReferencePropagator, SliceSpec,
};
use quasirest::quantization::weyl_matrix;
use quasirest::symbol::{builtin, SymbolField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 0.5f64.powi(j)).collect()
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![x.ln(), 1.0]).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    least_squares(&rows, &y).unwrap().coefficients[0]
}

/// Free evolution under `c ξ²` of `e^{-(x-x0)²/2h} e^{iξ₀x/h}`, in closed form.
fn spreading_gaussian(c: f64, x0: f64, xi0: f64, h: f64, t: f64, x: f64) -> Complex64 {
    let s = Complex64::new(h, 0.0);
    let width = s + Complex64::new(0.0, 2.0 * c * h * t);
    let k = xi0 / h;
    let centre = x0 + 2.0 * c * xi0 * t;
    let z = -(x - centre).powi(2) / (2.0 * width);
    let phase = Complex64::new(0.0, k * x - c * h * k * k * t);
    (s / width).sqrt() * (z + phase).exp()
}

#[test]
fn free_parametrix_and_reference_match_spreading_gaussian() {
    let (h, t, c) = (1.0 / 32.0, 0.5, 1.0);
    let (x0, xi0) = (-0.5, 0.5);
    let grid = PeriodicGrid::new(1, 512, 2.0 * PI).unwrap();
    let u0 = GridFunction::from_fn(grid, h, |x| spreading_gaussian(c, x0, xi0, h, 0.0, x[0]));
    let exact = GridFunction::from_fn(grid, h, |x| spreading_gaussian(c, x0, xi0, h, t, x[0]));
    let a = builtin::free(1, c);

    let reference = ReferencePropagator::new(&a, &grid, h, 1e-3).unwrap().apply(&u0, t).unwrap();
    let rel = reference.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
    assert!(rel < 1e-4, "reference relative error {rel:e}");

    let spec = u0.spectrum();
    let top = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let etas: Vec<Vec<f64>> = (0..grid.len()).filter(|&m| spec[m].norm() > 1e-12 * top).map(|m| grid.frequency(m, h)).collect();
    let xs = grid.points();
    let table = solve_eikonal(&a, &[0.0, t], &xs, &etas, &EikonalOptions { residual_samples: 50, ..Default::default() }).unwrap();
    let para = apply_parametrix(&table, &u0, t).unwrap();
    let rel = para.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
    assert!(rel < 1e-4, "parametrix relative error {rel:e}");
}

#[test]
fn eikonal_residual_on_shipped_hamiltonians() {
    let h = 1.0 / 32.0;
    let grid = PeriodicGrid::new(1, 256, 2.0 * PI).unwrap();
    let xs: Vec<Vec<f64>> = grid.points().into_iter().filter(|x| x[0].abs() < 1.0).collect();
    let etas: Vec<Vec<f64>> = (-8..=8).map(|m| vec![m as f64 * h]).collect();
    let hamiltonians = [
        builtin::free(1, 1.0),
        builtin::free(1, 0.5),
        builtin::transport(vec![0.7]),
        builtin::pendulum(),
        builtin::oscillator(1.0),
    ];
    for a in &hamiltonians {
        let table = solve_eikonal(a, &[0.0, 0.1, 0.2], &xs, &etas, &EikonalOptions::default()).unwrap();
        assert!(table.eikonal_residual < 1e-6, "{}: residual {:e}", a.name(), table.eikonal_residual);
        for (xi, x) in xs.iter().enumerate() {
            for (ei, eta) in etas.iter().enumerate() {
                assert_eq!(table.phi[table.index(0, xi, ei)], x[0] * eta[0]);
            }
        }
    }
}

#[test]
fn pendulum_phase_converges_at_fourth_order() {
    let t = 0.5;
    let phases: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| HamiltonianFlow::new(builtin::pendulum(), dt).unwrap().trajectory(&[0.4], &[0.6], t).phi)
        .collect();
    let ratio = (phases[0] - phases[1]) / (phases[1] - phases[2]);
    assert!((ratio.log2() - 4.0).abs() < 0.3, "ratio {ratio}");
}

#[test]
fn strang_splitting_converges_at_second_order() {
    let h = 1.0 / 32.0;
    let grid = PeriodicGrid::new(1, 256, 2.0 * PI).unwrap();
    let u0 = coherent_state(&[0.3], &[0.5], h, &grid).unwrap();
    let a = builtin::pendulum();
    let fine = reference_propagator(&a, &u0, 0.5, 4096).unwrap();
    let steps = [16usize, 32, 64, 128];
    let errs: Vec<f64> = steps.iter().map(|&s| reference_propagator(&a, &u0, 0.5, s).unwrap().sub(&fine).unwrap().l2_norm()).collect();
    let dts: Vec<f64> = steps.iter().map(|&s| 0.5 / s as f64).collect();
    let order = log_slope(&dts, &errs);
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn free_plane_wave_phase_advance() {
    let h = 1.0 / 16.0;
    let grid = PeriodicGrid::new(1, 64, 2.0 * PI).unwrap();
    let m = 5.0;
    let u0 = GridFunction::from_fn(grid, h, |x| Complex64::from_polar(1.0, m * x[0]));
    let t = 0.7;
    let v = reference_propagator(&builtin::free(1, 1.0), &u0, t, 1).unwrap();
    let xi = m * h;
    let factor = Complex64::from_polar(1.0, -t * xi * xi / h);
    let err = v.sub(&u0.clone().scale(factor)).unwrap().l2_norm();
    assert!(err < 1e-12, "{err:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reference_is_unitary(t in 0.05f64..2.0, x0 in -1.0f64..1.0, xi0 in -0.8f64..0.8) {
        let h = 1.0 / 32.0;
        let grid = PeriodicGrid::new(1, 256, 2.0 * PI).unwrap();
        let u0 = coherent_state(&[x0], &[xi0], h, &grid).unwrap();
        let v = ReferencePropagator::new(&builtin::pendulum(), &grid, h, 1e-3).unwrap().apply(&u0, t).unwrap();
        prop_assert!((v.l2_norm() - u0.l2_norm()).abs() < 1e-10 * t.max(1.0));
    }
}

#[test]
fn duhamel_without_source_is_the_propagator() {
    let h = 1.0 / 16.0;
    let grid = PeriodicGrid::new(1, 128, 2.0 * PI).unwrap();
    let u0 = coherent_state(&[0.1], &[0.4], h, &grid).unwrap();
    let a = builtin::pendulum();
    let zero = |_: f64| GridFunction::zeros(grid, h);
    let d = duhamel_solve(&a, &u0, &zero, 0.6, 10, 1e-3).unwrap();
    let r = ReferencePropagator::new(&a, &grid, h, 1e-3).unwrap().apply(&u0, 0.6).unwrap();
    assert!(d.sub(&r).unwrap().l2_norm() < 1e-13);

    // a unitary propagator bounds the solution by the data plus the source mass
    let g = coherent_state(&[-0.5], &[0.2], h, &grid).unwrap();
    let src = move |s: f64| g.clone().scale(Complex64::new(s.cos(), 0.0));
    let t = 0.6;
    let u = duhamel_solve(&a, &u0, &src, t, 20, 1e-3).unwrap();
    assert!(u.l2_norm() <= u0.l2_norm() + t * 1.0 + 1e-12);
}

/// Brute-force `(1/N) Σ_m p((x_j + x_l)/2, hκ_m) e^{iκ_m(x_j − x_l)}`.
#[test]
fn weyl_matrix_matches_direct_sum() {
    let h = 0.2;
    let grid = PeriodicGrid::new(1, 32, 2.0 * PI).unwrap();
    let sym = SymbolField::new(1, "mixed", |x, xi| (1.0 + 0.3 * x[0].sin()) * xi[0] * xi[0] + x[0].cos() * xi[0]);
    let m = weyl_matrix(&sym, h, &grid).unwrap();
    let n = grid.points_per_axis;
    for j in 0..n {
        for l in 0..n {
            let (xj, xl) = (grid.coordinate(j), grid.coordinate(l));
            let mid = 0.5 * (xj + xl);
            let direct: Complex64 = (0..n)
                .map(|s| {
                    let k = grid.wavenumber(s);
                    Complex64::from_polar(sym.value(&[mid], &[h * k]), k * (xj - xl))
                })
                .sum::<Complex64>()
                / n as f64;
            assert!((m[(j, l)] - direct).norm() < 1e-12, "entry ({j}, {l})");
        }
    }
}

#[test]
fn noisy_synthetic_kernel_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hs = dyadic(5, 9);
    let taus: Vec<f64> = (0..11).map(|j| 0.5 * 0.5f64.powf(j as f64 / 2.0)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut rows = Vec::new();
        for &h in &hs {
            for &tau in &taus {
                let clean = h.powf(-0.5) * (h + tau).powf(-0.5);
                let noisy = |r: &mut ChaCha8Rng| clean * (1.0 + 0.01 * r.random_range(-1.0..1.0));
                let (sup_norm, op_norm) = (noisy(&mut rng), noisy(&mut rng));
                rows.push(KernelRow { h, t: tau, s: 0.0, tau, points_per_axis: 0, nodes: 1, sup_norm, op_norm });
            }
        }
        let fit = fit_kernel_exponents(&KernelEstimate { rows }, 8.0, 0.5).unwrap();
        for v in [fit.mu_inf, fit.sigma_inf, fit.mu_2, fit.sigma_2] {
            worst = worst.max((v - 0.5).abs());
        }
    }
    assert!(worst <= 0.03, "worst deviation {worst}");
}

#[test]
fn pendulum_point_kernel_exponents() {
    let taus: Vec<f64> = (0..11).map(|j| 0.5 * 0.5f64.powf(j as f64 / 2.0)).collect();
    let cfg = KernelConfig::new(1, 2.0 * PI, SliceSpec::Point, dyadic(5, 9), taus.iter().map(|&t| (t, 0.0)).collect());
    let est = restricted_kernel_decay(&builtin::pendulum(), &cfg).unwrap();
    assert!(est.rows.iter().all(|r| r.sup_norm.is_finite() && r.sup_norm > 0.0 && r.op_norm > 0.0));
    let fit = fit_kernel_exponents(&est, 8.0, 0.5).unwrap();
    // n = 2, k = 1: every exponent is 1/2
    for (name, v) in [("mu_inf", fit.mu_inf), ("sigma_inf", fit.sigma_inf), ("mu_2", fit.mu_2), ("sigma_2", fit.sigma_2)] {
        assert!((v - 0.5).abs() <= 0.05, "{name} = {v}");
    }
}

#[test]
fn equal_times_kernel_is_of_order_inverse_h() {
    let cfg = KernelConfig::new(1, 2.0 * PI, SliceSpec::Full, dyadic(4, 6), vec![(0.3, 0.3)]);
    let est = restricted_kernel_decay(&builtin::free(1, 1.0), &cfg).unwrap();
    // Σ χ(hκ)²/L over |ξ| ≲ 2 is of order 1/(πh)
    for r in &est.rows {
        let scaled = r.sup_norm * r.h;
        assert!(scaled > 0.2 && scaled < 1.5, "h = {}: h·sup = {scaled}", r.h);
    }
}
