//! JSON run configurations. Every struct rejects unknown keys and is
//! validated before any work starts.

use std::path::{Path, PathBuf};

use mzq_core::estimate::{RateFitOptions, SpectrumFitOptions};
use mzq_core::{BathModel, CircuitSpec, Drive, QubitScatterer, TransmonParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

/// Linearly spaced frequency grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.start_hz.is_finite() && self.stop_hz.is_finite() && self.start_hz > 0.0) {
            return Err(Failure::config("grid: start_hz must be finite and > 0"));
        }
        if self.stop_hz <= self.start_hz || self.points < 2 {
            return Err(Failure::config("grid: need stop_hz > start_hz and at least 2 points"));
        }
        Ok(())
    }

    pub fn freqs(&self) -> Vec<f64> {
        crate::output::linspace(self.start_hz, self.stop_hz, self.points)
    }
}

fn default_label() -> String {
    "trace".into()
}

fn check_label(label: &str) -> CliResult<()> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !label.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "label '{label}' must be non-empty ASCII letters, digits, '_', '-' or '.'"
        )))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub circuit: CircuitSpec,
    pub grid: Grid,
    #[serde(default)]
    pub drive: Drive,
    #[serde(default = "default_label")]
    pub label: String,
}

impl SimulateConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.circuit.validate()?;
        self.grid.validate()?;
        check_label(&self.label)
    }
}

/// Flux-noise parameters without the operating-point slope, which each
/// sweep point derives from the transmon.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxNoise {
    /// Φ₀.
    pub sigma: f64,
    /// rad/s.
    pub kappa: f64,
}

/// One synthetic trace per flux bias, with rates from the bath and
/// flux-noise models.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSweep {
    pub transmon: TransmonParams,
    pub fluxes: Vec<f64>,
    pub bath: BathModel,
    pub flux_noise: FluxNoise,
    pub r0: f64,
    /// rad/s.
    pub rabi: f64,
    /// Each window spans `ω₀₁/2π ± half_width_hz`.
    pub half_width_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub circuit: CircuitSpec,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub drive: Drive,
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default)]
    pub flux_sweep: Option<FluxSweep>,
}

impl SynthConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.circuit.validate()?;
        check_label(&self.label)?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Failure::config("noise_sigma must be finite and >= 0"));
        }
        match (&self.grid, &self.flux_sweep) {
            (Some(g), None) => g.validate(),
            (None, Some(s)) => {
                if self.circuit.qubit.is_some() {
                    return Err(Failure::config(
                        "flux_sweep derives the qubit per point; remove circuit.qubit",
                    ));
                }
                s.validate()
            }
            _ => Err(Failure::config("give exactly one of grid or flux_sweep")),
        }
    }
}

impl FluxSweep {
    fn validate(&self) -> CliResult<()> {
        self.transmon.validate()?;
        self.bath.validate()?;
        if self.fluxes.is_empty() || self.fluxes.iter().any(|f| !f.is_finite()) {
            return Err(Failure::config("flux_sweep.fluxes must be a non-empty list of finite values"));
        }
        let n = self.flux_noise;
        if !(n.sigma.is_finite() && n.sigma >= 0.0 && n.kappa.is_finite() && n.kappa >= 0.0) {
            return Err(Failure::config("flux_noise needs finite sigma >= 0 and kappa >= 0"));
        }
        if !(self.r0 > 0.0 && self.r0 <= 1.0) {
            return Err(Failure::config("flux_sweep.r0 must lie in (0, 1]"));
        }
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(Failure::config("flux_sweep.rabi must be finite and >= 0"));
        }
        if !(self.half_width_hz.is_finite() && self.half_width_hz > 0.0) || self.points < 2 {
            return Err(Failure::config("flux_sweep needs half_width_hz > 0 and at least 2 points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpectrumConfig {
    /// Interferometer template; any qubit entry is ignored.
    pub circuit: CircuitSpec,
    /// Probe Rabi frequency, rad/s; held fixed.
    pub rabi: f64,
    #[serde(default)]
    pub options: SpectrumFitOptions,
    /// Single trace file.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Manifest written by `synth` with a flux sweep.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    /// Starting point; estimated from the data when absent.
    #[serde(default)]
    pub initial: Option<QubitScatterer>,
}

impl FitSpectrumConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.circuit.validate()?;
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(Failure::config("rabi must be finite and >= 0"));
        }
        if let Some(q) = &self.initial {
            q.validate()?;
        }
        if self.trace.is_some() == self.manifest.is_some() {
            return Err(Failure::config("give exactly one of trace or manifest"));
        }
        Ok(())
    }
}

fn default_curve_points() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRatesConfig {
    pub rates: PathBuf,
    pub transmon: TransmonParams,
    #[serde(default)]
    pub options: RateFitOptions,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

impl FitRatesConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.transmon.validate()?;
        if self.curve_points < 2 {
            return Err(Failure::config("curve_points must be >= 2"));
        }
        if !(self.options.max_rel_err > 0.0) {
            return Err(Failure::config("options.max_rel_err must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub traces: Vec<PathBuf>,
}

impl ClassifyConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.traces.is_empty() {
            return Err(Failure::config("traces must list at least one file"));
        }
        Ok(())
    }
}

/// One trace of a flux sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Path relative to the manifest.
    pub file: PathBuf,
    pub flux: f64,
    /// Generating parameters, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<QubitScatterer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub traces: Vec<ManifestEntry>,
}

/// Reads and parses a JSON document.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// Resolves `p` against the directory holding `base`.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}
