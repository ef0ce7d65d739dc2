//! Ohmic bath with a parasitic Lorentzian mode, and the coupling constants
//! that connect the qubit dipole to the Ohmic strength.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::constants;
use crate::error::{Error, Result};

/// `Γ₁(ω) = α·ω + w·(Γ/2)² / ((ω − ω_L0)² + (Γ/2)²)`. Rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathModel {
    pub alpha: f64,
    pub lorentz_center: f64,
    /// Full width at half maximum.
    pub lorentz_fwhm: f64,
    /// Peak height of the Lorentzian.
    #[serde(default)]
    pub lorentz_weight: f64,
}

impl BathModel {
    pub fn ohmic(alpha: f64) -> Self {
        Self {
            alpha,
            lorentz_center: 1.0,
            lorentz_fwhm: 1.0,
            lorentz_weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.lorentz_fwhm > 0.0 && self.lorentz_weight >= 0.0) {
            return Err(Error::InvalidParameter(
                "bath model needs alpha >= 0, lorentz_fwhm > 0, lorentz_weight >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Peak-normalised Lorentzian of full width `fwhm` centred at `center`.
pub fn lorentzian(omega: f64, center: f64, fwhm: f64) -> f64 {
    let hw2 = 0.25 * fwhm * fwhm;
    hw2 / ((omega - center).powi(2) + hw2)
}

pub fn gamma1_model(b: &BathModel, omega01: f64) -> f64 {
    b.alpha * omega01 + b.lorentz_weight * lorentzian(omega01, b.lorentz_center, b.lorentz_fwhm)
}

/// Dipole coupling of the qubit to the transmission-line continuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    /// Dipole moment over the waveguide cross-section, A·s.
    pub d_tilde: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_c() -> f64 {
    constants::C
}
fn default_epsilon0() -> f64 {
    constants::EPSILON0
}
fn default_hbar() -> f64 {
    constants::HBAR
}

impl CouplingParams {
    pub fn new(d_tilde: f64) -> Self {
        Self {
            d_tilde,
            c: constants::C,
            epsilon0: constants::EPSILON0,
            hbar: constants::HBAR,
        }
    }

    /// `g₀ = √(d̃² / (ħ ε₀))`.
    pub fn g0(&self) -> f64 {
        (self.d_tilde * self.d_tilde / (self.hbar * self.epsilon0)).sqrt()
    }

    /// Ohmic strength `α = d̃² / (ħ c ε₀)`.
    pub fn alpha(&self) -> f64 {
        self.d_tilde * self.d_tilde / (self.hbar * self.c * self.epsilon0)
    }

    /// Coupling to a single line mode, `g₀·√(ω_k / 2L)`.
    pub fn coupling_gk(&self, omega_k: f64, line_length: f64) -> Result<f64> {
        if !(line_length > 0.0) {
            return Err(Error::InvalidParameter("line_length must be > 0".into()));
        }
        Ok(self.g0() * (omega_k / (2.0 * line_length)).sqrt())
    }
}

pub fn alpha_from_dipole(c: &CouplingParams) -> f64 {
    c.alpha()
}

/// Ohmic strength inferred from a resonator coupling, `π (g/ω_res)²`.
pub fn alpha_res(g: f64, omega_res: f64) -> Result<f64> {
    if !(omega_res > 0.0) {
        return Err(Error::InvalidParameter("omega_res must be > 0".into()));
    }
    Ok(PI * (g / omega_res).powi(2))
}

/// Kondo-convention coupling, `α / 2π`.
pub fn kondo_alpha(alpha: f64) -> f64 {
    alpha / (2.0 * PI)
}

/// `J(ω) = β·ω·exp(−ω/ω_c)`. An infinite cutoff gives the bare Ohmic form.
pub fn spectral_density_ohmic(beta: f64, omega: f64, cutoff: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::InvalidParameter("omega must be >= 0".into()));
    }
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter("cutoff must be > 0".into()));
    }
    Ok(beta * omega * (-omega / cutoff).exp())
}

/// Dressed qubit–resonator frequencies `(upper, lower)`.
pub fn dressed_frequencies(omega_res: f64, omega_q: f64, g: f64) -> Result<(f64, f64)> {
    if !(g >= 0.0) {
        return Err(Error::InvalidParameter("g must be >= 0".into()));
    }
    let mean = 0.5 * (omega_res + omega_q);
    let half = (g * g + 0.25 * (omega_res - omega_q).powi(2)).sqrt();
    Ok((mean + half, mean - half))
}
