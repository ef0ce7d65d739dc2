mod common;

use std::f64::consts::TAU;

use common::*;
use mzq_core::components::{qubit_rt, scatter_at};
use mzq_core::estimate::lm::{self, LmOptions, ParamSpec};
use mzq_core::estimate::{classify_regime, fit_gamma1, fit_spectrum, initial_guess, RateFitOptions, SpectrumFitOptions};
use mzq_core::physics::{gamma_phi_model, ou_coherence, ou_spectrum, OuNoise};
use mzq_core::{cascade, sweep, CircuitSpec, Complex, Drive, LineParams, Path, QubitScatterer, TransferMatrix4};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex::new(a, b))
}

fn matrix() -> impl Strategy<Value = TransferMatrix4> {
    proptest::array::uniform16(complex()).prop_map(|v| {
        let mut m = [[Complex::new(0.0, 0.0); 4]; 4];
        for (k, z) in v.into_iter().enumerate() {
            m[k / 4][k % 4] = z;
        }
        TransferMatrix4::from_rows(m).unwrap()
    })
}

fn qubit() -> impl Strategy<Value = QubitScatterer> {
    (4e9f64..8.5e9, 0.1e6f64..5e6, 0.0f64..5e6, 0.05f64..1.0, 0.0f64..5e6).prop_map(|(f, g1, gp, r0, rabi)| {
        QubitScatterer {
            omega01: TAU * f,
            gamma1: TAU * g1,
            gamma_phi: TAU * gp,
            r0,
            rabi: TAU * rabi,
        }
    })
}

fn lossless_lines() -> impl Strategy<Value = LineParams> {
    (0.0f64..5e-9, 0.0f64..5e-9).prop_map(|(a, b)| LineParams::lossless_arms(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cascade_is_associative(a in matrix(), b in matrix(), c in matrix()) {
        let left = cascade(&[cascade(&[a, b]).unwrap(), c]).unwrap();
        let right = cascade(&[a, cascade(&[b, c]).unwrap()]).unwrap();
        prop_assert!(left.max_rel_diff(&right) <= 1e-12);
    }

    #[test]
    fn identity_is_neutral(a in matrix()) {
        let i = TransferMatrix4::identity();
        prop_assert_eq!(cascade(&[i, a]).unwrap(), a);
        prop_assert_eq!(cascade(&[a, i]).unwrap(), a);
    }

    #[test]
    fn reflection_plus_transmission_is_one(q in qubit(), detune in -50.0f64..50.0) {
        let (r, t) = qubit_rt(&q, q.omega01 + detune * q.gamma2()).unwrap();
        prop_assert!((r + t - Complex::new(1.0, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn lossless_circuit_conserves_power(lines in lossless_lines(), f in 1e9f64..12e9) {
        let spec = CircuitSpec { lines, ..CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ) };
        let s = scatter_at(&spec, f).unwrap();
        prop_assert!((s.column_power_port2() - 1.0).abs() <= 1e-9);
        prop_assert!((s.column_power_port4() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn elastic_scatterer_conserves_power(f0 in 4e9f64..8.5e9, g1 in 0.1e6f64..5e6, detune in 0.01f64..50.0) {
        // r₀ = 1 without dephasing or drive scatters elastically.
        let q = QubitScatterer { omega01: TAU * f0, gamma1: TAU * g1, gamma_phi: 0.0, r0: 1.0, rabi: 0.0 };
        let spec = CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ).with_qubit(q);
        let s = scatter_at(&spec, (q.omega01 + detune * q.gamma2()) / TAU).unwrap();
        prop_assert!((s.column_power_port2() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn far_detuned_qubit_is_invisible(q in qubit(), k in 1.0e3f64..1.0e4, below in prop::bool::ANY) {
        let d = k * q.gamma2();
        let f = if below && q.omega01 - d > TAU * 1e9 { q.omega01 - d } else { q.omega01 + d } / TAU;
        let bare = scatter_at(&CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ), f).unwrap();
        let with = scatter_at(&CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ).with_qubit(q), f).unwrap();
        let pairs = [(bare.s12, with.s12), (bare.s32, with.s32), (bare.s22, with.s22), (bare.s42, with.s42)];
        let diff: f64 = pairs.iter().map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = pairs.iter().map(|(a, _)| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-3 * norm, "diff {}", diff / norm);
    }

    #[test]
    fn sweep_is_pointwise(q in qubit(), seed in 0u64..1000) {
        let spec = CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ).with_qubit(q);
        let freqs = window(q.omega01 / TAU + 7.3e6);
        let full = sweep(&spec, &freqs, Drive::Port2).unwrap();
        let k = (seed as usize) % freqs.len();
        let single = sweep(&spec, &freqs[k..=k], Drive::Port2).unwrap();
        prop_assert_eq!(full.get(Path::S12).unwrap()[k], single.get(Path::S12).unwrap()[0]);
    }

    #[test]
    fn coherence_is_monotone_and_bounded(v in 1e4f64..1e8, ratio in 0.0f64..1e3) {
        let n = OuNoise { sigma: 1.0, kappa: ratio * v, slope: v };
        let mut last = 1.0;
        for k in 0..50 {
            let c = ou_coherence(&n, k as f64 * 0.1 / v).unwrap();
            prop_assert!(c > 0.0 && c <= 1.0);
            prop_assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn spectrum_is_even_and_positive(v in 1e4f64..1e8, kappa in 1e3f64..1e9, w in 0.0f64..1e10) {
        let n = OuNoise { sigma: 1.0, kappa, slope: v };
        let a = ou_spectrum(&n, w).unwrap();
        prop_assert!(a > 0.0);
        prop_assert_eq!(a, ou_spectrum(&n, -w).unwrap());
    }

    #[test]
    fn dephasing_rate_monotonicity(v in 1e5f64..1e8, kappa in 0.0f64..1e9, up in 1.001f64..3.0) {
        let rate = |v: f64, kappa: f64| gamma_phi_model(&OuNoise { sigma: 1.0, kappa, slope: v }).unwrap();
        prop_assert!(rate(v * up, kappa) > rate(v, kappa));
        prop_assert!(rate(v, kappa * up + 1.0) <= rate(v, kappa) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_ignores_scale_and_phase(f0 in prop::sample::select(vec![4.556e9, 5.826e9, 7.288e9]), s in 0.01f64..100.0, phase in 0.0f64..TAU) {
        let q = qubit_at(f0);
        let trace = spectrum_trace(&q, 0.0, 0);
        let mut moved = trace.clone();
        let k = Complex::from_polar(s, phase);
        for v in moved.paths.values_mut() {
            for z in v.iter_mut() {
                *z *= k;
            }
        }
        prop_assert_eq!(classify_regime(&trace).unwrap(), classify_regime(&moved).unwrap());
    }

    #[test]
    fn spectrum_fit_ignores_global_rescaling(seed in 0u64..1000, s in 0.1f64..10.0, phase in 0.0f64..TAU) {
        let q = qubit_at(5.3e9);
        let trace = spectrum_trace(&q, 0.01, seed);
        let mut moved = trace.clone();
        let k = Complex::from_polar(s, phase);
        for v in moved.paths.values_mut() {
            for z in v.iter_mut() {
                *z *= k;
            }
        }
        moved.noise_sigma *= s;
        let template = CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ);
        let opts = SpectrumFitOptions::default();
        let a = fit_spectrum(&trace, &template, &initial_guess(&trace, &template, q.rabi).unwrap(), &opts).unwrap();
        let b = fit_spectrum(&moved, &template, &initial_guess(&moved, &template, q.rabi).unwrap(), &opts).unwrap();
        for name in ["omega01", "gamma1", "gamma_phi", "r0"] {
            let (x, y) = (a.result.params[name], b.result.params[name]);
            prop_assert!((x - y).abs() <= 1e-6 * x.abs(), "{} {} {}", name, x, y);
        }
    }

    #[test]
    fn optimizer_history_decreases(seed in 0u64..1000) {
        let q = qubit_at(5.826e9);
        let trace = spectrum_trace(&q, 0.01, seed);
        let template = CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ);
        let fit = fit_spectrum(&trace, &template, &initial_guess(&trace, &template, q.rabi).unwrap(), &SpectrumFitOptions::default()).unwrap();
        prop_assert!(fit.history.len() >= 2);
        prop_assert!(fit.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn least_squares_history_decreases(a in 0.5f64..5.0, b in 0.1f64..3.0, seed in 0u64..1000) {
        let mut rng = rng(seed);
        let xs: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * (-b * x).exp() + 0.01 * normal(&mut rng)).collect();
        let f = |p: &[f64]| Ok(xs.iter().zip(&ys).map(|(x, y)| p[0] * (-p[1] * x).exp() - y).collect());
        let rep = lm::minimize(f, &[1.0, 1.0], &[ParamSpec::free(1.0); 2], &LmOptions::default()).unwrap();
        prop_assert!(rep.history.windows(2).all(|w| w[1] < w[0]));
    }
}

/// Confidence intervals from a fit whose data noise is doubled, with the
/// same underlying noise draw, roughly double.
#[test]
fn doubling_noise_doubles_intervals() {
    let q = qubit_at(5.3e9);
    let clean = spectrum_trace(&q, 0.0, 0);
    let noisy = spectrum_trace(&q, 0.002, 9);
    let mut doubled = clean.clone();
    for (path, values) in doubled.paths.iter_mut() {
        let n = noisy.get(*path).unwrap();
        let c = clean.get(*path).unwrap();
        for ((z, a), b) in values.iter_mut().zip(n).zip(c) {
            *z = b + 2.0 * (a - b);
        }
    }
    let template = CircuitSpec::mach_zehnder(INTERFEROMETER_CENTER_HZ);
    let opts = SpectrumFitOptions::default();
    let a = fit_spectrum(&noisy, &template, &initial_guess(&noisy, &template, q.rabi).unwrap(), &opts).unwrap();
    let b = fit_spectrum(&doubled, &template, &initial_guess(&doubled, &template, q.rabi).unwrap(), &opts).unwrap();
    for name in ["omega01", "gamma1", "gamma_phi", "r0"] {
        let ratio = b.result.ci95[name] / a.result.ci95[name];
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{name}: {ratio}");
    }

    let base = rate_dataset(30, &bath(), &OuNoise { sigma: 79e-6, kappa: 0.0, slope: 1.0 }, 0.05, 4);
    let exact = rate_dataset(30, &bath(), &OuNoise { sigma: 79e-6, kappa: 0.0, slope: 1.0 }, 0.0, 4);
    let mut wide = base.clone();
    for ((w, b), e) in wide.rows.iter_mut().zip(&base.rows).zip(&exact.rows) {
        w.gamma1 = e.gamma1 + 2.0 * (b.gamma1 - e.gamma1);
    }
    let opts = RateFitOptions::default();
    let a = fit_gamma1(&base, &opts).unwrap();
    let b = fit_gamma1(&wide, &opts).unwrap();
    let ratio = b.ci95["alpha"] / a.ci95["alpha"];
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "alpha: {ratio}");
}
