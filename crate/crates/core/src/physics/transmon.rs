use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric-SQUID transmon. Energies are given as frequencies (E/h, Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonParams {
    pub ej_max: f64,
    pub ec: f64,
}

impl TransmonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ej_max.is_finite() && self.ec.is_finite() && self.ec > 0.0) {
            return Err(Error::InvalidParameter("ej_max and ec must be finite, ec > 0".into()));
        }
        if self.ej_max / self.ec <= 10.0 {
            return Err(Error::InvalidParameter(format!(
                "ej_max/ec = {:.2} is outside the transmon regime (> 10)",
                self.ej_max / self.ec
            )));
        }
        Ok(())
    }

    /// Flux in `[0, 0.5)` at which the transition sits at `omega` (rad/s),
    /// or `None` when `omega` is above the sweet-spot maximum or non-positive.
    pub fn flux_for_omega(&self, omega: f64) -> Option<f64> {
        let f = omega / TAU + self.ec;
        let cos = f * f / (8.0 * self.ej_max * self.ec);
        if omega <= 0.0 || cos > 1.0 {
            return None;
        }
        Some(cos.acos() / PI)
    }
}

fn squid_cos(flux: f64) -> Result<f64> {
    let c = (PI * flux).cos();
    // cos(π/2) evaluates to ~6e-17 rather than 0
    if !flux.is_finite() || c.abs() < 1e-12 {
        return Err(Error::DegenerateFlux { flux });
    }
    Ok(c)
}

/// Qubit transition frequency (rad/s) at flux bias `flux` (units of Φ₀).
pub fn omega01(t: &TransmonParams, flux: f64) -> Result<f64> {
    let c = squid_cos(flux)?;
    Ok(TAU * ((8.0 * t.ej_max * c.abs() * t.ec).sqrt() - t.ec))
}

/// `∂ω₀₁/∂Φ` in rad/s per Φ₀.
pub fn domega01_dflux(t: &TransmonParams, flux: f64) -> Result<f64> {
    let c = squid_cos(flux)?;
    let d_abs_cos = -PI * (PI * flux).sin() * c.signum();
    Ok(TAU * (8.0 * t.ej_max * t.ec).sqrt() * d_abs_cos / (2.0 * c.abs().sqrt()))
}
