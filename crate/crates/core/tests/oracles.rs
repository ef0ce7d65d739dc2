mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use mzq_core::physics::bath::CouplingParams;
use mzq_core::physics::{domega01_dflux, ou_coherence, ou_spectrum, OuNoise};
use mzq_core::{cascade, solve_ports, Complex};

#[test]
fn cascade_matches_index_loops() {
    let mut rng = rng(11);
    for _ in 0..200 {
        let ms: Vec<_> = (0..5).map(|_| random_matrix(&mut rng)).collect();
        let total = cascade(&ms).unwrap();
        let oracle = naive_product(&ms);
        let scale = oracle.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..4 {
            for j in 0..4 {
                assert!((total.get(i, j) - oracle[i][j]).norm() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn solve_ports_matches_dense_solvers() {
    let mut rng = rng(7);
    let mut checked = 0;
    while checked < 1000 {
        let m = random_matrix(&mut rng);
        let a2 = Complex::new(normal(&mut rng), normal(&mut rng));
        let a4 = Complex::new(normal(&mut rng), normal(&mut rng));
        let (a, b) = port_system(&m, a2, a4);
        if condition(&a) > 1e4 {
            continue;
        }
        checked += 1;
        let p = solve_ports(&m, a2, a4).unwrap();
        let got = [p.a1_out, p.a3_out, p.a4_out, p.a2_out];
        let scale = got.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for oracle in [full_pivot_solve(a, b), nalgebra_solve(&a, &b)] {
            for k in 0..4 {
                assert!(
                    (got[k] - oracle[k]).norm() <= 1e-10 * scale,
                    "unknown {k}: {} vs {}",
                    got[k],
                    oracle[k]
                );
            }
        }
        assert_eq!(p.a1_in, Complex::new(0.0, 0.0));
        assert_eq!(p.a3_in, Complex::new(0.0, 0.0));
        assert_eq!((p.a2_in, p.a4_in), (a2, a4));
    }
}

#[test]
fn solve_ports_is_linear_in_drive() {
    let mut rng = rng(3);
    for _ in 0..200 {
        let m = random_matrix(&mut rng);
        let lambda = Complex::new(normal(&mut rng), normal(&mut rng));
        let a2 = Complex::new(1.0, 0.0);
        let base = solve_ports(&m, a2, Complex::new(0.0, 0.0)).unwrap();
        let scaled = solve_ports(&m, lambda * a2, Complex::new(0.0, 0.0)).unwrap();
        let scale = scaled.left().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (x, y) in base.left().iter().zip(scaled.left()) {
            assert!((lambda * x - y).norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn flux_derivative_matches_finite_differences() {
    let h = 1e-6;
    let mut n = 0;
    for k in 0..110 {
        let flux = -0.5 + k as f64 / 109.0;
        if (flux.abs() - 0.5).abs() < 0.02 {
            continue;
        }
        n += 1;
        let w = |x: f64| mzq_core::physics::omega01(&TRANSMON, x).unwrap();
        let fd = (w(flux + h) - w(flux - h)) / (2.0 * h);
        let exact = domega01_dflux(&TRANSMON, flux).unwrap();
        assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "flux {flux}: {fd} vs {exact}");
    }
    assert!(n >= 100);
}

#[test]
fn ou_spectrum_integrates_to_variance() {
    for (v, kappa) in [(TAU * 1e6, TAU * 1e3), (TAU * 1e6, TAU * 1e6), (TAU * 3e5, TAU * 5e8)] {
        let n = OuNoise {
            sigma: 1.0,
            kappa,
            slope: v,
        };
        // ω = κ sinh u maps the Lorentzian onto a rapidly decaying integrand.
        let total = simpson(
            |u| ou_spectrum(&n, kappa * u.sinh()).unwrap() * kappa * u.cosh(),
            -40.0,
            40.0,
            8000,
        );
        assert!((total / (TAU * v * v) - 1.0).abs() < 1e-4, "{total}");
    }
}

#[test]
fn ou_coherence_matches_monte_carlo_small_sample() {
    let v = TAU * 1e6;
    for ratio in [0.0, 1.0, 100.0] {
        let mc = ou_coherence_monte_carlo(v, ratio * v, 5.0 / v, 50, 20_000, 5);
        let n = OuNoise {
            sigma: 1.0,
            kappa: ratio * v,
            slope: v,
        };
        let rms = (mc
            .iter()
            .enumerate()
            .map(|(k, m)| (m - ou_coherence(&n, k as f64 * 0.1 / v).unwrap()).powi(2))
            .sum::<f64>()
            / mc.len() as f64)
            .sqrt();
        assert!(rms < 0.02, "kappa/v = {ratio}: rms {rms}");
    }
}

#[test]
fn continuum_sum_reproduces_ohmic_rate() {
    // Left- and right-moving modes ω_n = n·Δω with Δω = 2πc/L, counted in a
    // window of width W around ω₀₁ and divided by W.
    let c = CouplingParams::new(6.9e-21);
    let omega01 = TAU * 5.3e9;
    let modes = 10_000usize;
    let d_omega = 2.0 * omega01 / modes as f64 * (1.0 + 0.37 / modes as f64);
    let length = TAU * c.c / d_omega;
    let width = 0.1 * omega01;
    let mut sum = 0.0;
    for n in 1..=modes {
        let w = n as f64 * d_omega;
        if (w - omega01).abs() < 0.5 * width {
            sum += 2.0 * c.coupling_gk(w, length).unwrap().powi(2);
        }
    }
    let rate = 2.0 * PI * sum / width;
    let expect = c.alpha() * omega01;
    assert!((rate / expect - 1.0).abs() < 0.01, "{rate} vs {expect}");
}
