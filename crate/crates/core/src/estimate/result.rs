use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::Result;

/// Estimates with linearized 95% confidence half-widths.
///
/// Non-finite numbers serialize as JSON `null`. On input a `null` estimate
/// becomes NaN and a `null` half-width or relative error becomes infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(deserialize_with = "nan_map")]
    pub params: BTreeMap<String, f64>,
    #[serde(deserialize_with = "inf_map")]
    pub ci95: BTreeMap<String, f64>,
    #[serde(deserialize_with = "inf_map")]
    pub rel_err: BTreeMap<String, f64>,
    #[serde(deserialize_with = "nan_value")]
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// One-sided 95% upper bounds for estimates compatible with zero.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", deserialize_with = "inf_map")]
    pub upper95: BTreeMap<String, f64>,
    /// Parameter order of `covariance`.
    #[serde(skip)]
    pub names: Vec<String>,
    /// Residual degrees of freedom.
    #[serde(skip)]
    pub dof: usize,
    #[serde(skip)]
    pub covariance: Option<DMatrix<f64>>,
}

fn nan_value<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn map_with<'de, D: Deserializer<'de>>(d: D, fill: f64) -> Result<BTreeMap<String, f64>, D::Error> {
    let raw = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(raw.into_iter().map(|(k, v)| (k, v.unwrap_or(fill))).collect())
}

fn nan_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    map_with(d, f64::NAN)
}

fn inf_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    map_with(d, f64::INFINITY)
}

/// Two-sided 95% Student-t factor.
pub(crate) fn t95(dof: usize) -> f64 {
    t_quantile(dof, 0.975)
}

pub(crate) fn t_quantile(dof: usize, p: f64) -> f64 {
    if dof == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|d| d.inverse_cdf(p))
        .unwrap_or(f64::INFINITY)
}

/// `ci/|estimate|`; zero when both vanish.
pub(crate) fn relative(ci: f64, estimate: f64) -> f64 {
    if ci == 0.0 {
        0.0
    } else {
        ci / estimate.abs()
    }
}

/// Linearized parameter covariance `s²·(JᵀJ)⁺` with `s² = ‖r‖²/(m − n)`.
///
/// Columns are normalized before the SVD. Parameters with a component along
/// a numerically null direction get infinite variance.
pub(crate) fn covariance(jac: &DMatrix<f64>, residuals: &[f64]) -> (DMatrix<f64>, usize) {
    let (m, n) = jac.shape();
    let dof = m.saturating_sub(n);
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let s2 = if dof > 0 { ss / dof as f64 } else { f64::INFINITY };

    let norms: Vec<f64> = (0..n).map(|j| jac.column(j).norm()).collect();
    let mut scaled = jac.clone();
    for (j, &c) in norms.iter().enumerate() {
        if c > 0.0 {
            scaled.column_mut(j).scale_mut(1.0 / c);
        }
    }
    let svd = scaled.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-10 * (m.max(n) as f64);
    let mut inv = DMatrix::zeros(n, n);
    let mut null = vec![false; n];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let row = v_t.row(k);
        if s > cutoff && s > 0.0 {
            inv += row.transpose() * row / (s * s);
        } else {
            for j in 0..n {
                if row[j].abs() > 1e-6 {
                    null[j] = true;
                }
            }
        }
    }
    for j in 0..n {
        if norms[j] == 0.0 {
            null[j] = true;
        }
    }
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = if null[i] || null[j] {
                if i == j {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            } else {
                s2 * inv[(i, j)] / (norms[i] * norms[j])
            };
        }
    }
    (cov, dof)
}

impl FitResult {
    /// Builds the result from estimates and their covariance.
    pub(crate) fn from_covariance(
        names: &[&str],
        params: &[f64],
        cov: DMatrix<f64>,
        dof: usize,
        residual_rms: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let t = t95(dof);
        let mut out = FitResult {
            params: BTreeMap::new(),
            ci95: BTreeMap::new(),
            rel_err: BTreeMap::new(),
            residual_rms,
            iterations,
            converged,
            upper95: BTreeMap::new(),
            names: names.iter().map(|s| s.to_string()).collect(),
            dof,
            covariance: None,
        };
        for (i, (&name, &p)) in names.iter().zip(params).enumerate() {
            let var = cov[(i, i)];
            let ci = if var >= 0.0 && var.is_finite() {
                t * var.sqrt()
            } else {
                f64::INFINITY
            };
            out.params.insert(name.into(), p);
            out.ci95.insert(name.into(), ci);
            out.rel_err.insert(name.into(), relative(ci, p));
        }
        out.covariance = Some(cov);
        out
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn ci(&self, name: &str) -> Option<f64> {
        self.ci95.get(name).copied()
    }

    pub fn rel(&self, name: &str) -> Option<f64> {
        self.rel_err.get(name).copied()
    }

    /// Standard error implied by the covariance, if one was computed.
    pub fn std_err(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        self.covariance.as_ref().map(|c| c[(i, i)].sqrt())
    }

    /// True when every listed parameter has a relative error below its limit.
    pub fn passes(&self, limits: &[(&str, f64)]) -> bool {
        limits
            .iter()
            .all(|(name, lim)| self.rel(name).is_some_and(|r| r < *lim))
    }

    /// Estimates in covariance order.
    pub fn ordered_params(&self) -> Vec<f64> {
        self.names.iter().map(|n| self.params[n]).collect()
    }

    /// Value of `g` at the estimate and its 95% half-width by the delta
    /// method, using a central-difference gradient.
    pub fn prediction<G>(&self, g: G) -> Result<(f64, f64)>
    where
        G: Fn(&[f64]) -> Result<f64>,
    {
        let p = self.ordered_params();
        let value = g(&p)?;
        let Some(cov) = &self.covariance else {
            return Ok((value, f64::NAN));
        };
        let n = p.len();
        let mut grad = vec![0.0; n];
        let mut work = p.clone();
        for j in 0..n {
            if cov[(j, j)] == 0.0 {
                continue;
            }
            let sd = cov[(j, j)].sqrt();
            let base = if sd.is_finite() { p[j].abs().max(sd) } else { p[j].abs() };
            let h = 1e-6 * base.max(f64::MIN_POSITIVE);
            work[j] = p[j] + h;
            let up = g(&work);
            work[j] = p[j] - h;
            let down = g(&work);
            work[j] = p[j];
            grad[j] = match (up, down) {
                (Ok(u), Ok(d)) => (u - d) / (2.0 * h),
                (Ok(u), Err(_)) => (u - value) / h,
                (Err(_), Ok(d)) => (value - d) / h,
                (Err(e), Err(_)) => return Err(e),
            };
        }
        let mut var = 0.0;
        for i in 0..n {
            for j in 0..n {
                if grad[i] != 0.0 && grad[j] != 0.0 {
                    var += grad[i] * cov[(i, j)] * grad[j];
                }
            }
        }
        let half = if var.is_finite() && var >= 0.0 {
            t95(self.dof) * var.sqrt()
        } else {
            f64::INFINITY
        };
        Ok((value, half))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
