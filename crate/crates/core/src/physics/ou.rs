//! Ornstein-Uhlenbeck flux noise: `⟨δΦ(0)δΦ(τ)⟩ = σ² e^{−κ|τ|}`, mapped to
//! frequency noise through the flux slope `∂ω₀₁/∂Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuNoise {
    /// Flux noise amplitude, Φ₀.
    pub sigma: f64,
    /// Correlation decay rate, rad/s.
    pub kappa: f64,
    /// `|∂ω₀₁/∂Φ|` at the operating point, rad/s per Φ₀.
    pub slope: f64,
}

impl OuNoise {
    /// Frequency-noise amplitude `v = |slope|·σ` (rad/s).
    pub fn v(&self) -> f64 {
        self.slope.abs() * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.kappa >= 0.0 && self.slope.is_finite()) {
            return Err(Error::InvalidParameter(
                "OU noise needs sigma >= 0, kappa >= 0 and a finite slope".into(),
            ));
        }
        Ok(())
    }
}

/// Frequency-noise spectral density `v²·2κ/(κ² + ω²)`.
pub fn ou_spectrum(n: &OuNoise, omega: f64) -> Result<f64> {
    n.validate()?;
    let v2 = n.v().powi(2);
    if n.kappa == 0.0 {
        return if omega == 0.0 {
            Err(Error::QuasiStaticLimit)
        } else {
            Ok(0.0)
        };
    }
    Ok(v2 * 2.0 * n.kappa / (n.kappa * n.kappa + omega * omega))
}

/// `(e^{−x} − 1 + x)/x²`, continuous through `x = 0`.
fn decay_kernel(x: f64) -> f64 {
    if x < 1e-3 {
        0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0
    } else {
        ((-x).exp_m1() + x) / (x * x)
    }
}

/// `(1 − e^{−x})/x`, continuous through `x = 0`.
fn decay_kernel_slope(x: f64) -> f64 {
    if x < 1e-6 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Coherence envelope `exp(−(v²/κ²)(e^{−κτ} − 1 + κτ))`, reducing to
/// `exp(−v²τ²/2)` for `κ = 0`.
pub fn ou_coherence(n: &OuNoise, tau: f64) -> Result<f64> {
    n.validate()?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter("tau must be >= 0".into()));
    }
    let v = n.v();
    Ok((-(v * tau).powi(2) * decay_kernel(n.kappa * tau)).exp())
}

/// Pure-dephasing rate `1/T_φ`, where the coherence envelope reaches `1/e`.
pub fn gamma_phi_model(n: &OuNoise) -> Result<f64> {
    n.validate()?;
    let v = n.v();
    if v == 0.0 {
        return Ok(0.0);
    }
    let a = n.kappa / v;
    // Solve h(u) = u²·K(a·u) − 1 = 0 for u = v·T_φ; h is increasing in u.
    let h = |u: f64| u * u * decay_kernel(a * u) - 1.0;
    let dh = |u: f64| u * decay_kernel_slope(a * u);
    let mut lo = 0.0;
    let mut hi = if a > 0.0 { 2f64.sqrt().max(a + 1.0 / a) } else { 2f64.sqrt() };
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut u = if a < 1.0 { 2f64.sqrt().min(hi) } else { (a + 1.0 / a).clamp(lo, hi) };
    for _ in 0..200 {
        let hu = h(u);
        if hu == 0.0 {
            break;
        }
        if hu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let step = hu / dh(u);
        let mut next = u - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * u {
            u = next;
            break;
        }
        u = next;
    }
    Ok(v / u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{SQRT_2, TAU};

    fn noise(v: f64, kappa: f64) -> OuNoise {
        OuNoise {
            sigma: 1.0,
            kappa,
            slope: v,
        }
    }

    #[test]
    fn coherence_limits() {
        let n = noise(TAU * 1e6, 0.0);
        assert_eq!(ou_coherence(&n, 0.0).unwrap(), 1.0);
        let tau = SQRT_2 / n.v();
        assert!((ou_coherence(&n, tau).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let n = noise(TAU * 1e6, TAU * 3e6);
        assert_eq!(ou_coherence(&n, 0.0).unwrap(), 1.0);
        assert!(ou_coherence(&n, -1.0).is_err());
    }

    #[test]
    fn coherence_small_kappa_is_continuous() {
        let tau = 2e-7;
        let a = ou_coherence(&noise(TAU * 1e6, 0.0), tau).unwrap();
        let b = ou_coherence(&noise(TAU * 1e6, 1e-3), tau).unwrap();
        assert!((a - b).abs() < 1e-9);
        // either side of the series switch-over
        let k1 = decay_kernel(0.999e-3);
        let k2 = decay_kernel(1.001e-3);
        assert!((k1 - k2).abs() < 1e-6);
    }

    #[test]
    fn dephasing_limits() {
        assert_eq!(gamma_phi_model(&noise(0.0, 1e6)).unwrap(), 0.0);
        let v = TAU * 1e6;
        let g = gamma_phi_model(&noise(v, 0.0)).unwrap();
        assert!((g / (v / SQRT_2) - 1.0).abs() < 1e-13);
        let g = gamma_phi_model(&noise(v, 100.0 * v)).unwrap();
        assert!((g / (v * v / (100.0 * v)) - 1.0).abs() < 0.02);
    }

    #[test]
    fn dephasing_is_the_one_over_e_time() {
        for &ratio in &[0.0, 0.01, 0.3, 1.0, 7.0, 1e3] {
            let v = TAU * 2e6;
            let n = noise(v, ratio * v);
            let g = gamma_phi_model(&n).unwrap();
            let c = ou_coherence(&n, 1.0 / g).unwrap();
            assert!((c - (-1f64).exp()).abs() < 1e-12, "ratio {ratio}: {c}");
        }
    }

    #[test]
    fn spectrum_limits() {
        let v = TAU * 1e6;
        let kappa = 1e4 * v;
        let n = noise(v, kappa);
        let flat = 2.0 * v * v / kappa;
        assert!((ou_spectrum(&n, 0.0).unwrap() / flat - 1.0).abs() < 1e-15);
        assert!((ou_spectrum(&n, 0.01 * kappa).unwrap() / flat - 1.0).abs() < 1e-3);
        assert!(matches!(
            ou_spectrum(&noise(v, 0.0), 0.0),
            Err(Error::QuasiStaticLimit)
        ));
        // peak 2v²/κ grows without bound as κ shrinks
        for kappa in [1e3, 1e1, 1e-1] {
            let peak = ou_spectrum(&noise(v, kappa), 0.0).unwrap();
            assert!(peak > ou_spectrum(&noise(v, 10.0 * kappa), 0.0).unwrap());
        }
    }
}
