//! Second-stage fits over per-spectrum rate estimates.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{self, LmOptions, LmReport, ParamSpec};
use super::result::{covariance, t_quantile, FitResult};
use crate::error::{Error, Result};
use crate::physics::{domega01_dflux, gamma1_model, gamma_phi_model, BathModel, OuNoise, TransmonParams};
use crate::trace::fmt_f64;

pub const RATE_CSV_HEADER: [&str; 5] = ["omega01", "gamma1", "gamma_phi", "flux", "rel_err_gamma_phi"];

/// Rates of one spectrum. Frequencies and rates in rad/s, flux in Φ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRow {
    pub omega01: f64,
    pub gamma1: f64,
    pub gamma_phi: f64,
    pub flux: f64,
    pub rel_err_gamma_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateDataset {
    pub rows: Vec<RateRow>,
}

/// Rows kept by a quality filter and the rows it dropped, with reasons.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: RateDataset,
    pub excluded: Vec<(RateRow, String)>,
}

impl RateDataset {
    pub fn new(rows: Vec<RateRow>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if !(r.omega01.is_finite() && r.omega01 > 0.0) {
                return Err(Error::InvalidParameter(format!("row {i}: omega01 must be > 0")));
            }
            if !(r.gamma1.is_finite() && r.gamma_phi.is_finite() && r.flux.is_finite()) {
                return Err(Error::InvalidParameter(format!("row {i}: non-finite rate or flux")));
            }
            if r.rel_err_gamma_phi.is_nan() || r.rel_err_gamma_phi < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "row {i}: rel_err_gamma_phi must be >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Keeps rows whose dephasing-rate relative error is below `max_rel_err`.
    pub fn filter(&self, max_rel_err: f64) -> FilterOutcome {
        let mut kept = Vec::new();
        let mut excluded = Vec::new();
        for r in &self.rows {
            if r.rel_err_gamma_phi < max_rel_err {
                kept.push(*r);
            } else {
                excluded.push((
                    *r,
                    format!("rel_err_gamma_phi {:.4} >= {max_rel_err}", r.rel_err_gamma_phi),
                ));
            }
        }
        FilterOutcome {
            kept: RateDataset::new(kept),
            excluded,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RATE_CSV_HEADER).map_err(csv_io)?;
        for r in &self.rows {
            w.write_record(
                [r.omega01, r.gamma1, r.gamma_phi, r.flux, r.rel_err_gamma_phi].map(fmt_f64),
            )
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the rate CSV. Non-finite relative errors (`inf`) are accepted.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers().map_err(|e| parse_err(e, 1))?.clone();
        if header.iter().collect::<Vec<_>>() != RATE_CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{}'", RATE_CSV_HEADER.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let rec = rec.map_err(|e| parse_err(e, line))?;
            if rec.len() != 5 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 5 fields, found {}", rec.len()),
                });
            }
            let mut v = [0.0; 5];
            for (i, slot) in v.iter_mut().enumerate() {
                *slot = rec[i].parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid {} '{}'", RATE_CSV_HEADER[i], &rec[i]),
                })?;
            }
            rows.push(RateRow {
                omega01: v[0],
                gamma1: v[1],
                gamma_phi: v[2],
                flux: v[3],
                rel_err_gamma_phi: v[4],
            });
        }
        let ds = RateDataset::new(rows);
        ds.validate()?;
        Ok(ds)
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn parse_err(e: csv::Error, fallback: usize) -> Error {
    Error::Parse {
        line: e.position().map(|p| p.line() as usize).unwrap_or(fallback),
        message: e.to_string(),
    }
}

/// How relaxation-rate residuals are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma1Weighting {
    /// Residuals divided by the observed rate (multiplicative scatter).
    #[default]
    Relative,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateFitOptions {
    /// Rows with `rel_err_gamma_phi` at or above this are dropped from the
    /// dephasing fits.
    pub max_rel_err: f64,
    pub min_rows: usize,
    /// Hz.
    pub min_span_hz: f64,
    /// Hz; all rows closer together than this is ill-posed.
    pub cluster_hz: f64,
    /// Required ratio between the largest and smallest flux slope.
    pub min_slope_span: f64,
    pub gamma1_weighting: Gamma1Weighting,
    pub allow_unconverged: bool,
    pub lm: LmOptions,
}

impl Default for RateFitOptions {
    fn default() -> Self {
        Self {
            max_rel_err: 0.33,
            min_rows: 8,
            min_span_hz: 2e9,
            cluster_hz: 100e6,
            min_slope_span: 2.0,
            gamma1_weighting: Gamma1Weighting::Relative,
            allow_unconverged: false,
            lm: LmOptions::default(),
        }
    }
}

fn finish(report: LmReport, names: &[&str], allow_unconverged: bool) -> Result<FitResult> {
    if !report.converged && !allow_unconverged {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            reason: report.termination,
        });
    }
    let (cov, dof) = covariance(&report.jacobian, &report.residuals);
    let rms = (report.residuals.iter().map(|v| v * v).sum::<f64>() / report.residuals.len() as f64).sqrt();
    Ok(FitResult::from_covariance(
        names,
        &report.params,
        cov,
        dof,
        rms,
        report.iterations,
        report.converged,
    ))
}

/// Weighted least squares with weights `1/(rel_i·|model_i|)` refreshed from
/// the model after every pass, so that noisy observations do not set their
/// own weights. Uniform weights when `rel` is `None`.
fn reweighted<M>(
    model: M,
    data: &[f64],
    rel: Option<&[f64]>,
    p0: &[f64],
    specs: &[ParamSpec],
    opts: &LmOptions,
) -> Result<LmReport>
where
    M: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let floor = 1e-12 * data.iter().fold(0.0f64, |a, d| a.max(d.abs())).max(f64::MIN_POSITIVE);
    let weights_for = |level: &[f64]| -> Vec<f64> {
        match rel {
            Some(rel) => level
                .iter()
                .zip(rel)
                .map(|(m, r)| 1.0 / (r * m.abs().max(floor)))
                .collect(),
            None => vec![1.0; data.len()],
        }
    };
    let mut weights = weights_for(data);
    let mut p = p0.to_vec();
    let mut last: Option<LmReport> = None;
    for _ in 0..MAX_REWEIGHT_PASSES {
        let w = weights.clone();
        let f = |q: &[f64]| -> Result<Vec<f64>> {
            let m = model(q)?;
            Ok(m.iter().zip(data).zip(&w).map(|((m, d), w)| (m - d) * w).collect())
        };
        let rep = lm::minimize(f, &p, specs, opts)?;
        let moved = rep
            .params
            .iter()
            .zip(&p)
            .zip(specs)
            .any(|((a, b), s)| (a - b).abs() > 1e-8 * a.abs().max(s.scale));
        p = rep.params.clone();
        let done = rel.is_none() || !moved || !rep.converged;
        last = Some(rep);
        if done {
            break;
        }
        weights = weights_for(&model(&p)?);
    }
    Ok(last.expect("at least one pass"))
}

const MAX_REWEIGHT_PASSES: usize = 10;

pub const GAMMA1_PARAMS: [&str; 4] = ["alpha", "omega_l0", "gamma_l", "weight"];

/// Bath model encoded by a `fit_gamma1` result.
pub fn gamma1_bath(p: &[f64]) -> BathModel {
    BathModel {
        alpha: p[0],
        lorentz_center: p[1],
        lorentz_fwhm: p[2],
        lorentz_weight: p[3],
    }
}

/// Fits `Γ₁ = α·ω₀₁ + weight·L(ω₀₁; ω_L0, Γ)` to the relaxation rates.
///
/// The Lorentzian center is confined to the sampled band and its width to
/// at least half the median row spacing.
pub fn fit_gamma1(rates: &RateDataset, opts: &RateFitOptions) -> Result<FitResult> {
    rates.validate()?;
    let mut rows = rates.rows.clone();
    rows.sort_by(|a, b| a.omega01.total_cmp(&b.omega01));
    let n = rows.len();
    if n < opts.min_rows {
        return Err(Error::IllPosed(format!(
            "{n} rows, the relaxation fit needs at least {}",
            opts.min_rows
        )));
    }
    let (w_min, w_max) = (rows[0].omega01, rows[n - 1].omega01);
    let span = w_max - w_min;
    if span < TAU * opts.cluster_hz {
        return Err(Error::IllPosed(format!(
            "all transition frequencies lie within {} MHz",
            opts.cluster_hz / 1e6
        )));
    }
    if span < TAU * opts.min_span_hz {
        return Err(Error::IllPosed(format!(
            "transition frequencies span {:.3} GHz, need {:.3} GHz",
            span / TAU / 1e9,
            opts.min_span_hz / 1e9
        )));
    }
    let omega: Vec<f64> = rows.iter().map(|r| r.omega01).collect();
    let gamma: Vec<f64> = rows.iter().map(|r| r.gamma1).collect();
    let g_max = gamma.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if !(g_max > 0.0) {
        return Err(Error::IllPosed("relaxation rates are all zero".into()));
    }
    let unit = vec![1.0; n];
    let rel = match opts.gamma1_weighting {
        Gamma1Weighting::Relative => Some(unit.as_slice()),
        Gamma1Weighting::Uniform => None,
    };

    // A Lorentzian narrower than the sampling or centred outside the data
    // trades off against the linear term without being resolved.
    let mut gaps: Vec<f64> = omega.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let min_width = (0.5 * gaps[gaps.len() / 2]).max(1e-4 * span);

    // Linear term from the lower half through the origin; the largest
    // remaining excess seeds the Lorentzian.
    let half = &rows[..n.div_ceil(2)];
    let alpha0 = (half.iter().map(|r| r.omega01 * r.gamma1).sum::<f64>()
        / half.iter().map(|r| r.omega01 * r.omega01).sum::<f64>())
    .max(0.0);
    let excess: Vec<f64> = (0..n).map(|i| gamma[i] - alpha0 * omega[i]).collect();
    let (k, &peak) = excess
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("n >= min_rows");
    let weight0 = peak.max(0.0);
    let lo = (0..k).rev().find(|&i| excess[i] < 0.5 * peak);
    let hi = (k + 1..n).find(|&i| excess[i] < 0.5 * peak);
    let width0 = match (lo, hi) {
        (Some(l), Some(h)) => omega[h] - omega[l],
        (Some(l), None) => 2.0 * (omega[k] - omega[l]),
        (None, Some(h)) => 2.0 * (omega[h] - omega[k]),
        (None, None) => 0.25 * span,
    }
    .clamp(min_width, 4.0 * span);

    let model = |p: &[f64]| -> Result<Vec<f64>> {
        let b = gamma1_bath(p);
        Ok(omega.iter().map(|w| gamma1_model(&b, *w)).collect())
    };
    let alpha_scale = alpha0.max(g_max / w_max).max(f64::MIN_POSITIVE);
    let specs = [
        ParamSpec::non_negative(alpha_scale),
        ParamSpec::bounded(w_min, w_max, span),
        ParamSpec::bounded(min_width, 4.0 * span, span),
        ParamSpec::non_negative(g_max.max(f64::MIN_POSITIVE)),
    ];
    let report = reweighted(model, &gamma, rel, &[alpha0, omega[k], width0, weight0], &specs, &opts.lm)?;
    finish(report, &GAMMA1_PARAMS, opts.allow_unconverged)
}

/// Rows usable for a dephasing fit together with `|∂ω₀₁/∂Φ|` per row.
fn dephasing_rows(
    rates: &RateDataset,
    transmon: &TransmonParams,
    opts: &RateFitOptions,
    require_positive: bool,
) -> Result<Vec<(RateRow, f64)>> {
    rates.validate()?;
    transmon.validate()?;
    let kept = rates.filter(opts.max_rel_err).kept;
    let mut rows = Vec::with_capacity(kept.len());
    for r in kept.rows {
        let slope = match domega01_dflux(transmon, r.flux) {
            Ok(s) => s.abs(),
            Err(Error::DegenerateFlux { .. }) => continue,
            Err(e) => return Err(e),
        };
        if slope > 0.0 && (!require_positive || r.gamma_phi > 0.0) {
            rows.push((r, slope));
        }
    }
    if rows.len() < 3 {
        return Err(Error::IllPosed(format!(
            "{} usable dephasing rows after filtering, need at least 3",
            rows.len()
        )));
    }
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, s)| (lo.min(*s), hi.max(*s)));
    if hi / lo < opts.min_slope_span {
        return Err(Error::IllPosed(format!(
            "flux slope spans a factor {:.3}, need {}",
            hi / lo,
            opts.min_slope_span
        )));
    }
    Ok(rows)
}

pub const POWER_PARAMS: [&str; 2] = ["eta", "log_amplitude"];

/// Weighted regression `ln Γφ = ln A + η·ln|∂ω₀₁/∂Φ|` with weights
/// `1/rel_err²` (uniform when no row carries an error estimate).
pub fn fit_gamma_phi_power(
    rates: &RateDataset,
    transmon: &TransmonParams,
    opts: &RateFitOptions,
) -> Result<FitResult> {
    let rows = dephasing_rows(rates, transmon, opts, true)?;
    let x: Vec<f64> = rows.iter().map(|(_, s)| s.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|(r, _)| r.gamma_phi.ln()).collect();
    let any_err = rows.iter().any(|(r, _)| r.rel_err_gamma_phi > 0.0);
    let floor = rows
        .iter()
        .map(|(r, _)| r.rel_err_gamma_phi)
        .filter(|e| *e > 0.0)
        .fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = rows
        .iter()
        .map(|(r, _)| {
            if any_err {
                r.rel_err_gamma_phi.max(floor).powi(-2)
            } else {
                1.0
            }
        })
        .collect();

    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let eta = sxy / sxx;
    let intercept = my - eta * mx;

    let resid: Vec<f64> = (0..x.len()).map(|i| y[i] - intercept - eta * x[i]).collect();
    let dof = x.len() - 2;
    let s2 = (0..x.len()).map(|i| w[i] * resid[i].powi(2)).sum::<f64>() / dof as f64;
    let var_eta = s2 / sxx;
    let var_b = s2 * (1.0 / sw + mx * mx / sxx);
    let cov_eb = -s2 * mx / sxx;
    let cov = DMatrix::from_row_slice(2, 2, &[var_eta, cov_eb, cov_eb, var_b]);
    let rms = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
    Ok(FitResult::from_covariance(&POWER_PARAMS, &[eta, intercept], cov, dof, rms, 1, true))
}

pub const OU_PARAMS: [&str; 2] = ["sigma", "kappa"];

/// Fits flux-noise amplitude `σ` (Φ₀) and correlation rate `κ` (rad/s)
/// through the Ornstein-Uhlenbeck dephasing model.
///
/// Residuals are weighted by the per-row standard error
/// `rel_err·Γφ/1.96`, with `Γφ` taken from the model. Two starts are tried,
/// `κ = 0` and `κ` equal to the median frequency-noise amplitude; the lower
/// objective wins. The one-sided 95% upper bound of `κ` is reported in
/// `upper95`.
pub fn fit_ou(rates: &RateDataset, transmon: &TransmonParams, opts: &RateFitOptions) -> Result<FitResult> {
    let rows = dephasing_rows(rates, transmon, opts, false)?;
    let z95 = 1.959_963_984_540_054;
    let rel: Vec<f64> = rows.iter().map(|(r, _)| r.rel_err_gamma_phi / z95).collect();
    let weighted = rel.iter().all(|r| *r > 0.0 && r.is_finite())
        && rows.iter().all(|(r, _)| r.gamma_phi != 0.0);
    let data: Vec<f64> = rows.iter().map(|(r, _)| r.gamma_phi).collect();
    let model = |p: &[f64]| -> Result<Vec<f64>> {
        rows.iter()
            .map(|(_, slope)| {
                gamma_phi_model(&OuNoise {
                    sigma: p[0],
                    kappa: p[1],
                    slope: *slope,
                })
            })
            .collect()
    };

    // Quasi-static limit Γφ = σ|slope|/√2 gives the starting amplitude.
    let mut ratios: Vec<f64> = rows
        .iter()
        .map(|(r, s)| std::f64::consts::SQRT_2 * r.gamma_phi / s)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let sigma0 = ratios[ratios.len() / 2].max(0.0);
    let mut v: Vec<f64> = rows.iter().map(|(_, s)| s * sigma0).collect();
    v.sort_by(f64::total_cmp);
    let v_med = v[v.len() / 2];
    let sigma_scale = if sigma0 > 0.0 { sigma0 } else { 1e-6 };
    let kappa_scale = if v_med > 0.0 { v_med } else { TAU * 1e6 };
    let specs = [ParamSpec::non_negative(sigma_scale), ParamSpec::non_negative(kappa_scale)];

    let mut best: Option<LmReport> = None;
    let mut last_err = None;
    for kappa0 in [0.0, v_med] {
        match reweighted(model, &data, weighted.then_some(rel.as_slice()), &[sigma0, kappa0], &specs, &opts.lm) {
            Ok(rep) => {
                let better = match &best {
                    None => true,
                    Some(b) => (rep.converged && !b.converged) || (rep.converged == b.converged && rep.cost < b.cost),
                };
                if better {
                    best = Some(rep);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let report = match (best, last_err) {
        (Some(r), _) => r,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start runs"),
    };
    let mut result = finish(report, &OU_PARAMS, opts.allow_unconverged)?;
    let bound = match result.std_err("kappa") {
        Some(se) if se.is_finite() => result.params["kappa"] + t_quantile(result.dof, 0.95) * se,
        _ => f64::INFINITY,
    };
    result.upper95.insert("kappa".into(), bound);
    Ok(result)
}
