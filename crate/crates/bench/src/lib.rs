//! Shared fixtures for the benchmarks.

use std::f64::consts::TAU;

use mzq_core::{synthesize, CircuitSpec, Drive, QubitScatterer, SpectrumTrace};

pub const CENTER_HZ: f64 = 5.746e9;

pub fn qubit(f0_hz: f64) -> QubitScatterer {
    QubitScatterer {
        omega01: TAU * f0_hz,
        gamma1: TAU * 2.0e6,
        gamma_phi: TAU * 1.0e6,
        r0: 0.6,
        rabi: TAU * 1.5e6,
    }
}

/// `points` frequencies spanning ±20 MHz around `center_hz`.
pub fn window(center_hz: f64, points: usize) -> Vec<f64> {
    let step = 40e6 / (points - 1) as f64;
    (0..points).map(|k| center_hz - 20e6 + k as f64 * step).collect()
}

pub fn circuit(f0_hz: f64) -> CircuitSpec {
    CircuitSpec::mach_zehnder(CENTER_HZ).with_qubit(qubit(f0_hz))
}

/// Noisy 201-point trace with the qubit at `f0_hz`.
pub fn noisy_trace(f0_hz: f64, seed: u64) -> SpectrumTrace {
    synthesize(&circuit(f0_hz), &window(f0_hz, 201), Drive::Port2, 0.01, seed).expect("valid fixture")
}
