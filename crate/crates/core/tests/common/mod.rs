//! Independent reference implementations and synthetic data generators
//! shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use mzq_core::components::{Drive, QubitScatterer};
use mzq_core::physics::bath::{gamma1_model, BathModel};
use mzq_core::physics::{domega01_dflux, gamma_phi_model, OuNoise, TransmonParams};
use mzq_core::{synthesize, CircuitSpec, Complex, RateDataset, RateRow, SpectrumTrace, TransferMatrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const TRANSMON: TransmonParams = TransmonParams {
    ej_max: 20.0e9,
    ec: 592.4e6,
};

pub const INTERFEROMETER_CENTER_HZ: f64 = 5.746e9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix(rng: &mut ChaCha8Rng) -> TransferMatrix4 {
    let mut m = [[Complex::new(0.0, 0.0); 4]; 4];
    for z in m.iter_mut().flatten() {
        *z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    TransferMatrix4::from_rows(m).unwrap()
}

/// Ordered product by explicit index loops.
pub fn naive_product(ms: &[TransferMatrix4]) -> [[Complex; 4]; 4] {
    let mut acc = *ms[0].rows();
    for m in &ms[1..] {
        let b = m.rows();
        let mut out = [[Complex::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    out[i][j] += acc[i][k] * b[k][j];
                }
            }
        }
        acc = out;
    }
    acc
}

/// Port equations with unknowns `(a1_out, a3_out, a4_out, a2_out)` and
/// `a1_in = a3_in = 0`: row `k` reads
/// `δ_k0·a1_out + δ_k2·a3_out − M_k1·a4_out − M_k3·a2_out = M_k0·a4_in + M_k2·a2_in`.
pub fn port_system(m: &TransferMatrix4, a2_in: Complex, a4_in: Complex) -> ([[Complex; 4]; 4], [Complex; 4]) {
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let mut a = [[zero; 4]; 4];
    let mut b = [zero; 4];
    for k in 0..4 {
        a[k][0] = if k == 0 { one } else { zero };
        a[k][1] = if k == 2 { one } else { zero };
        a[k][2] = -m.get(k, 1);
        a[k][3] = -m.get(k, 3);
        b[k] = m.get(k, 0) * a4_in + m.get(k, 2) * a2_in;
    }
    (a, b)
}

/// Gaussian elimination with full pivoting.
pub fn full_pivot_solve(mut a: [[Complex; 4]; 4], mut b: [Complex; 4]) -> [Complex; 4] {
    let mut col_of = [0usize, 1, 2, 3];
    for k in 0..4 {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for i in k..4 {
            for j in k..4 {
                if a[i][j].norm() > best {
                    best = a[i][j].norm();
                    pi = i;
                    pj = j;
                }
            }
        }
        a.swap(k, pi);
        b.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        col_of.swap(k, pj);
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            for j in k..4 {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
            let v = b[k];
            b[i] -= f * v;
        }
    }
    let mut y = [Complex::new(0.0, 0.0); 4];
    for k in (0..4).rev() {
        let mut s = b[k];
        for j in k + 1..4 {
            s -= a[k][j] * y[j];
        }
        y[k] = s / a[k][k];
    }
    let mut x = [Complex::new(0.0, 0.0); 4];
    for k in 0..4 {
        x[col_of[k]] = y[k];
    }
    x
}

/// 2-norm condition number of a complex 4×4 matrix.
pub fn condition(a: &[[Complex; 4]; 4]) -> f64 {
    let m = nalgebra::Matrix4::from_fn(|i, j| a[i][j]);
    let s = m.singular_values();
    s.max() / s.min()
}

/// Solves the same system through nalgebra's complex LU.
pub fn nalgebra_solve(a: &[[Complex; 4]; 4], b: &[Complex; 4]) -> [Complex; 4] {
    let m = nalgebra::Matrix4::from_fn(|i, j| a[i][j]);
    let rhs = nalgebra::Vector4::from_column_slice(b);
    let x = m.lu().solve(&rhs).expect("non-singular");
    [x[0], x[1], x[2], x[3]]
}

/// Monte-Carlo coherence `⟨cos ∫₀^τ δω dt⟩` for Ornstein-Uhlenbeck frequency
/// noise of amplitude `v` and rate `kappa`, sampled exactly on a uniform
/// grid of `steps` intervals up to `t_max`. Returns the averages at every
/// grid point, starting at `τ = 0`.
pub fn ou_coherence_monte_carlo(v: f64, kappa: f64, t_max: f64, steps: usize, trajectories: usize, seed: u64) -> Vec<f64> {
    let dt = t_max / steps as f64;
    // Conditional moments of (x', ∫x dt) given x over one step.
    let (decay, mean_int, a, b, c) = if kappa == 0.0 {
        (1.0, dt, 0.0, 0.0, 0.0)
    } else {
        let e = (-kappa * dt).exp();
        let var_x = v * v * (1.0 - e * e);
        let cov = v * v * (1.0 - e).powi(2) / kappa;
        let var_i = v * v / (kappa * kappa) * (2.0 * kappa * dt - 3.0 + 4.0 * e - e * e);
        let a = var_x.sqrt();
        let b = if a > 0.0 { cov / a } else { 0.0 };
        let c = (var_i - b * b).max(0.0).sqrt();
        (e, (1.0 - e) / kappa, a, b, c)
    };
    let mut rng = rng(seed);
    let mut sums = vec![0.0; steps + 1];
    for _ in 0..trajectories {
        let mut x = v * normal(&mut rng);
        let mut phase = 0.0f64;
        sums[0] += 1.0;
        for s in sums.iter_mut().skip(1) {
            let (z1, z2) = if kappa == 0.0 {
                (0.0, 0.0)
            } else {
                (normal(&mut rng), normal(&mut rng))
            };
            phase += x * mean_int + b * z1 + c * z2;
            x = decay * x + a * z1;
            *s += phase.cos();
        }
    }
    sums.iter().map(|s| s / trajectories as f64).collect()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn bath() -> BathModel {
    BathModel {
        alpha: 1.7e-4,
        lorentz_center: TAU * 8.3e9,
        lorentz_fwhm: TAU * 1.5e9,
        lorentz_weight: TAU * 1e6,
    }
}

/// `n` qubit frequencies (rad/s) uniformly covering 4–8.5 GHz.
pub fn band(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| TAU * (4e9 + 4.5e9 * i as f64 / (n - 1) as f64))
        .collect()
}

/// Rate table with multiplicative Gaussian scatter of relative size `rel`
/// on both rates. `rel_err_gamma_phi` is the matching 95% half-width.
pub fn rate_dataset(n: usize, bath: &BathModel, noise: &OuNoise, rel: f64, seed: u64) -> RateDataset {
    let mut rng = rng(seed);
    let rows = band(n)
        .into_iter()
        .map(|w| {
            let flux = TRANSMON.flux_for_omega(w).unwrap();
            let slope = domega01_dflux(&TRANSMON, flux).unwrap();
            let gphi = gamma_phi_model(&OuNoise { slope, ..*noise }).unwrap();
            let g1 = gamma1_model(bath, w);
            RateRow {
                omega01: w,
                gamma1: g1 * (1.0 + rel * normal(&mut rng)),
                gamma_phi: gphi * (1.0 + rel * normal(&mut rng)),
                flux,
                rel_err_gamma_phi: 1.96 * rel,
            }
        })
        .collect();
    RateDataset::new(rows)
}

pub fn qubit_at(f0_hz: f64) -> QubitScatterer {
    QubitScatterer {
        omega01: TAU * f0_hz,
        gamma1: TAU * 2.0e6,
        gamma_phi: TAU * 1.0e6,
        r0: 0.6,
        rabi: TAU * 1.5e6,
    }
}

/// 201 points at 0.2 MHz spacing centred on `center_hz`.
pub fn window(center_hz: f64) -> Vec<f64> {
    (0..201).map(|k| center_hz - 20e6 + k as f64 * 0.2e6).collect()
}

pub fn spectrum_trace(q: &QubitScatterer, noise_sigma: f64, seed: u64) -> SpectrumTrace {
    let spec = CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ).with_qubit(*q);
    synthesize(&spec, &window(q.omega01 / TAU), Drive::Port2, noise_sigma, seed).unwrap()
}
