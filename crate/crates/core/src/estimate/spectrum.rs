//! Single-spectrum fit of the qubit parameters.
//!
//! The complex calibration scale enters the model linearly and is eliminated
//! by variable projection: for any set of nonlinear parameters the optimal
//! scale is the least-squares projection of the data onto the model. The
//! fit is therefore exactly invariant under a global complex rescaling of
//! the data.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::lm::{self, LmOptions, ParamSpec};
use super::result::{covariance, FitResult};
use crate::components::{
    bs_matrix, qubit_matrix, sweep, tl_matrix, CircuitSpec, Drive, QubitScatterer,
};
use crate::error::{Error, Result};
use crate::netcore::{Complex, ScatterSolution, TransferMatrix4};
use crate::trace::{Path, SpectrumTrace};

/// How the reflection amplitude `r₀` is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R0Mode {
    /// `r₀` is a free parameter. Separating `Γ₁` from `Γφ` then relies on
    /// the saturation term, so the probe Rabi frequency must be non-zero.
    #[default]
    Free,
    /// `r₀ = Γ₁/(2Γ₂)`, purely radiative decay into the line.
    Radiative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumFitOptions {
    pub r0_mode: R0Mode,
    /// Fit a linear phase slope (cable delay) in addition to the scale.
    pub fit_delay: bool,
    /// Return unconverged fits instead of failing with `NoConvergence`.
    pub allow_unconverged: bool,
    pub lm: LmOptions,
}

impl Default for SpectrumFitOptions {
    fn default() -> Self {
        Self {
            r0_mode: R0Mode::Free,
            fit_delay: true,
            allow_unconverged: false,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumFit {
    pub result: FitResult,
    /// Fitted scatterer, including the fixed Rabi frequency.
    pub qubit: QubitScatterer,
    pub scale: Complex,
    /// Seconds, relative to the window center `reference_hz`.
    pub delay: f64,
    pub reference_hz: f64,
    /// Model evaluated on the data grid for the fitted paths.
    pub model: SpectrumTrace,
    /// Objective after every accepted optimizer step.
    pub history: Vec<f64>,
}

impl SpectrumFit {
    /// Data minus model on the fitted paths.
    pub fn residual_trace(&self, data: &SpectrumTrace) -> SpectrumTrace {
        let mut out = SpectrumTrace::new(data.freqs.clone(), data.label.clone());
        for (path, model) in &self.model.paths {
            let d = data.get(*path).expect("fitted paths come from the data");
            out.paths
                .insert(*path, d.iter().zip(model).map(|(a, b)| a - b).collect());
        }
        out
    }
}

/// Pre-assembled frequency-dependent parts of the circuit.
struct Forward {
    freqs: Vec<f64>,
    reference_hz: f64,
    paths: Vec<Path>,
    data: Vec<Complex>,
    left: Vec<TransferMatrix4>,
    right: Vec<TransferMatrix4>,
    template: CircuitSpec,
    rabi: f64,
    mode: R0Mode,
    fit_delay: bool,
}

impl Forward {
    fn new(trace: &SpectrumTrace, template: &CircuitSpec, rabi: f64, opts: &SpectrumFitOptions) -> Result<Self> {
        let mut paths: Vec<Path> = [Path::S12, Path::S34]
            .into_iter()
            .filter(|p| trace.paths.contains_key(p))
            .collect();
        if paths.is_empty() {
            return Err(Error::InvalidParameter("trace has no cross path (s12 or s34)".into()));
        }
        paths.sort();
        let mut left = Vec::with_capacity(trace.freqs.len());
        let mut right = Vec::with_capacity(trace.freqs.len());
        for &f in &trace.freqs {
            let omega = TAU * f;
            let bs = bs_matrix(&template.splitter, omega)?;
            let tl = tl_matrix(&template.lines, omega)?;
            left.push(&bs * &tl);
            right.push(&tl * &bs);
        }
        let data = paths
            .iter()
            .flat_map(|p| trace.get(*p).expect("filtered").iter().copied())
            .collect();
        let n = trace.freqs.len();
        Ok(Self {
            freqs: trace.freqs.clone(),
            reference_hz: 0.5 * (trace.freqs[0] + trace.freqs[n - 1]),
            paths,
            data,
            left,
            right,
            template: *template,
            rabi,
            mode: opts.r0_mode,
            fit_delay: opts.fit_delay,
        })
    }

    fn names(&self) -> Vec<&'static str> {
        let mut names = vec!["omega01", "gamma1", "gamma_phi"];
        if self.mode == R0Mode::Free {
            names.push("r0");
        }
        if self.fit_delay {
            names.push("delay");
        }
        names
    }

    fn qubit(&self, p: &[f64]) -> QubitScatterer {
        let (omega01, gamma1, gamma_phi) = (p[0], p[1], p[2]);
        let r0 = match self.mode {
            R0Mode::Free => p[3],
            R0Mode::Radiative => gamma1 / (gamma1 + 2.0 * gamma_phi),
        };
        QubitScatterer {
            omega01,
            gamma1,
            gamma_phi,
            r0,
            rabi: self.rabi,
        }
    }

    fn delay(&self, p: &[f64]) -> f64 {
        if self.fit_delay {
            p[p.len() - 1]
        } else {
            0.0
        }
    }

    /// Unscaled model values, ordered like `data`.
    fn model(&self, p: &[f64]) -> Result<Vec<Complex>> {
        let q = self.qubit(p);
        let delay = self.delay(p);
        let n = self.freqs.len();
        let mut out = vec![Complex::new(0.0, 0.0); n * self.paths.len()];
        for (k, &f) in self.freqs.iter().enumerate() {
            let qm = qubit_matrix(&q, TAU * f, self.template.qubit_arm, self.template.qubit_form)
                .map_err(|e| e.at_frequency(f))?;
            let total = &(&self.left[k] * &qm) * &self.right[k];
            let s = ScatterSolution::from_total(&total).map_err(|e| e.at_frequency(f))?;
            let phase = Complex::from_polar(1.0, -TAU * (f - self.reference_hz) * delay);
            for (j, path) in self.paths.iter().enumerate() {
                out[j * n + k] = path.select(&s) * phase;
            }
        }
        Ok(out)
    }

    fn best_scale(&self, m: &[Complex]) -> Complex {
        let num: Complex = m.iter().zip(&self.data).map(|(m, d)| m.conj() * d).sum();
        let den: f64 = m.iter().map(|m| m.norm_sqr()).sum();
        if den > 0.0 {
            num / den
        } else {
            Complex::new(0.0, 0.0)
        }
    }

    fn stack(&self, m: &[Complex], scale: Complex) -> Vec<f64> {
        let mut r = Vec::with_capacity(2 * m.len());
        for (m, d) in m.iter().zip(&self.data) {
            let e = scale * m - d;
            r.push(e.re);
            r.push(e.im);
        }
        r
    }

    /// Residuals with the scale projected out.
    fn projected(&self, p: &[f64]) -> Result<Vec<f64>> {
        let m = self.model(p)?;
        let a = self.best_scale(&m);
        Ok(self.stack(&m, a))
    }

    /// Residuals with the scale appended as two explicit parameters.
    fn full(&self, p: &[f64]) -> Result<Vec<f64>> {
        let k = p.len() - 2;
        let m = self.model(&p[..k])?;
        Ok(self.stack(&m, Complex::new(p[k], p[k + 1])))
    }
}

fn require_points(trace: &SpectrumTrace) -> Result<()> {
    trace.validate()?;
    if trace.freqs.len() < 20 {
        return Err(Error::IllPosed(format!(
            "spectrum fit needs at least 20 points, got {}",
            trace.freqs.len()
        )));
    }
    Ok(())
}

/// Deterministic starting point for [`fit_spectrum`].
///
/// The qubit-free circuit is fitted to the data with a complex scale; the
/// largest excursion of the remainder gives `ω₀₁` and the half-power width of
/// the excursion gives `Γ₂`. With `Γφ = Γ₁/2` that fixes `Γ₁ = Γ₂`.
pub fn initial_guess(trace: &SpectrumTrace, template: &CircuitSpec, rabi: f64) -> Result<QubitScatterer> {
    require_points(trace)?;
    let path = trace
        .cross_path()
        .ok_or_else(|| Error::InvalidParameter("trace has no cross path (s12 or s34)".into()))?;
    let bare = CircuitSpec {
        qubit: None,
        calibration: None,
        ..*template
    };
    let background = sweep(&bare, &trace.freqs, Drive::Both)?;
    let m0 = background.get(path).expect("all paths swept");
    let d = trace.get(path).expect("cross path");
    let num: Complex = m0.iter().zip(d).map(|(m, d)| m.conj() * d).sum();
    let den: f64 = m0.iter().map(|m| m.norm_sqr()).sum();
    let a = if den > 0.0 { num / den } else { Complex::new(0.0, 0.0) };
    let power: Vec<f64> = m0.iter().zip(d).map(|(m, d)| (d - a * m).norm_sqr()).collect();

    let (k_max, &p_max) = power
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty");
    let n = power.len();
    let half = 0.5 * p_max;
    let lo = (0..k_max).rev().find(|&k| power[k] < half);
    let hi = (k_max + 1..n).find(|&k| power[k] < half);
    let freqs = &trace.freqs;
    let span = freqs[n - 1] - freqs[0];
    let fwhm_hz = match (lo, hi) {
        (Some(l), Some(h)) => freqs[h] - freqs[l],
        (Some(l), None) => 2.0 * (freqs[k_max] - freqs[l]),
        (None, Some(h)) => 2.0 * (freqs[h] - freqs[k_max]),
        (None, None) => 0.25 * span,
    };
    let min_step = freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let gamma2 = PI * fwhm_hz.max(min_step);
    Ok(QubitScatterer {
        omega01: TAU * freqs[k_max],
        gamma1: gamma2,
        gamma_phi: 0.5 * gamma2,
        r0: 0.9,
        rabi,
    })
}

/// Least-squares fit of `(ω₀₁, Γ₁, Γφ, r₀)`, the complex calibration scale and
/// a cable delay to the cross paths of `trace`.
///
/// The circuit layout (splitters, lines, qubit arm) comes from
/// `spec_template`; its own qubit and calibration are ignored. `init`
/// supplies the starting point and the fixed probe Rabi frequency.
pub fn fit_spectrum(
    trace: &SpectrumTrace,
    spec_template: &CircuitSpec,
    init: &QubitScatterer,
    opts: &SpectrumFitOptions,
) -> Result<SpectrumFit> {
    require_points(trace)?;
    spec_template.validate()?;
    init.validate()?;
    if opts.r0_mode == R0Mode::Free && init.rabi == 0.0 {
        return Err(Error::IllPosed(
            "with a free r0 and zero probe power only Γ₁/2 + Γφ is identifiable".into(),
        ));
    }
    let fwd = Forward::new(trace, spec_template, init.rabi, opts)?;
    let names = fwd.names();

    let n = trace.freqs.len();
    let (f_lo, f_hi) = (trace.freqs[0], trace.freqs[n - 1]);
    let gamma_scale = init.gamma2().max(TAU * (f_hi - f_lo) * 1e-6);
    let mut p0 = vec![init.omega01, init.gamma1, init.gamma_phi];
    let mut specs = vec![
        ParamSpec::bounded(TAU * f_lo, TAU * f_hi, gamma_scale),
        ParamSpec::non_negative(gamma_scale),
        ParamSpec::non_negative(gamma_scale),
    ];
    if opts.r0_mode == R0Mode::Free {
        p0.push(init.r0);
        specs.push(ParamSpec::bounded(0.0, 1.0, 1.0));
    }
    if opts.fit_delay {
        p0.push(0.0);
        specs.push(ParamSpec::free(1.0 / (TAU * (f_hi - f_lo))));
    }

    let report = lm::minimize(|p| fwd.projected(p), &p0, &specs, &opts.lm)?;
    if !report.converged && !opts.allow_unconverged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            reason: report.termination,
        });
    }

    let model = fwd.model(&report.params)?;
    let scale = fwd.best_scale(&model);

    // Covariance over the nonlinear parameters and the explicit scale.
    let mut full_p = report.params.clone();
    full_p.extend([scale.re, scale.im]);
    let mut full_specs = specs.clone();
    let s_abs = scale.norm().max(f64::MIN_POSITIVE);
    full_specs.extend([ParamSpec::free(s_abs), ParamSpec::free(s_abs)]);
    let r_full = fwd.full(&full_p)?;
    let jac = lm::jacobian(&|p: &[f64]| fwd.full(p), &full_p, &r_full, &full_specs, opts.lm.fd_step)?;
    let (cov, dof) = covariance(&jac, &r_full);
    let mut all_names = names.clone();
    all_names.extend(["scale_re", "scale_im"]);
    let rms = (r_full.iter().map(|v| v * v).sum::<f64>() / r_full.len() as f64).sqrt();
    let result = FitResult::from_covariance(
        &all_names,
        &full_p,
        cov,
        dof,
        rms,
        report.iterations,
        report.converged,
    );

    let mut model_trace = SpectrumTrace::new(trace.freqs.clone(), trace.label.clone());
    for (j, path) in fwd.paths.iter().enumerate() {
        model_trace
            .paths
            .insert(*path, model[j * n..(j + 1) * n].iter().map(|m| scale * m).collect());
    }

    Ok(SpectrumFit {
        result,
        qubit: fwd.qubit(&report.params),
        scale,
        delay: fwd.delay(&report.params),
        reference_hz: fwd.reference_hz,
        model: model_trace,
        history: report.history,
    })
}
