//! Levenberg-Marquardt damped least squares with a finite-difference Jacobian
//! and box bounds.
//!
//! Damping uses Marquardt's diagonal scaling with Nielsen's update rule.
//! Trial points are projected onto the bounds; a trial whose residuals fail
//! to evaluate or come out non-finite is treated as a rejected step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative objective change that ends the iteration.
    pub ftol: f64,
    /// Relative parameter change that ends the iteration.
    pub xtol: f64,
    /// Cosine between residual and Jacobian columns that counts as stationary.
    pub gtol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-10,
            xtol: 1e-14,
            gtol: 1e-12,
            fd_step: 1e-6,
        }
    }
}

/// Bounds and typical magnitude of one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub lower: f64,
    pub upper: f64,
    /// Floor for the finite-difference step base and the convergence test.
    pub scale: f64,
}

impl ParamSpec {
    pub fn free(scale: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            scale,
        }
    }

    pub fn bounded(lower: f64, upper: f64, scale: f64) -> Self {
        Self {
            lower,
            upper,
            scale,
        }
    }

    pub fn non_negative(scale: f64) -> Self {
        Self::bounded(0.0, f64::INFINITY, scale)
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Jacobian at `params`.
    pub jacobian: DMatrix<f64>,
    /// `½‖r‖²`
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: String,
    /// Objective after the start and after every accepted step.
    pub history: Vec<f64>,
}

fn half_norm2(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn all_finite(r: &[f64]) -> bool {
    r.iter().all(|v| v.is_finite())
}

/// Central-difference Jacobian, one-sided next to a bound.
pub fn jacobian<F>(f: &F, p: &[f64], r0: &[f64], specs: &[ParamSpec], rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, p.len());
    let mut work = p.to_vec();
    for (j, spec) in specs.iter().enumerate() {
        let h = rel_step * p[j].abs().max(spec.scale);
        let up = p[j] + h <= spec.upper;
        let down = p[j] - h >= spec.lower;
        let eval = |work: &mut Vec<f64>, x: f64| -> Option<Vec<f64>> {
            work[j] = x;
            let r = f(work).ok().filter(|r| r.len() == m && all_finite(r));
            work[j] = p[j];
            r
        };
        let plus = if up { eval(&mut work, p[j] + h) } else { None };
        let minus = if down { eval(&mut work, p[j] - h) } else { None };
        let col: Vec<f64> = match (plus, minus) {
            (Some(a), Some(b)) => a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Some(a), None) => a.iter().zip(r0).map(|(a, b)| (a - b) / h).collect(),
            (None, Some(b)) => r0.iter().zip(&b).map(|(a, b)| (a - b) / h).collect(),
            (None, None) => {
                return Err(Error::InvalidParameter(format!(
                    "cannot evaluate finite difference for parameter {j}"
                )))
            }
        };
        jac.set_column(j, &DVector::from_vec(col));
    }
    Ok(jac)
}

/// Minimizes `½‖f(p)‖²` from `p0` within the bounds in `specs`.
///
/// Returns the report even when the iteration cap is reached or the step
/// stalls; callers inspect `converged`.
pub fn minimize<F>(f: F, p0: &[f64], specs: &[ParamSpec], opts: &LmOptions) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    assert_eq!(p0.len(), specs.len(), "one ParamSpec per parameter");
    let n = p0.len();
    let mut p: Vec<f64> = p0.iter().zip(specs).map(|(v, s)| s.clamp(*v)).collect();
    let mut r = f(&p)?;
    if r.is_empty() || !all_finite(&r) {
        return Err(Error::BadInitialization);
    }
    if r.len() < n {
        return Err(Error::IllPosed(format!(
            "{} residuals for {n} parameters",
            r.len()
        )));
    }
    let mut cost = half_norm2(&r);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut termination = String::from("iteration limit reached");
    let mut iterations = 0;
    let mut diag = vec![f64::MIN_POSITIVE; n];

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            termination = "zero residual".into();
            break;
        }
        let jac = jacobian(&f, &p, &r, specs, opts.fd_step)?;
        let rv = DVector::from_column_slice(&r);
        let mut g = jac.transpose() * &rv;
        let mut a = jac.transpose() * &jac;
        // Parameters on a bound whose descent direction points outward are
        // held fixed for this iteration.
        for j in 0..n {
            let pinned = (p[j] <= specs[j].lower && g[j] > 0.0) || (p[j] >= specs[j].upper && g[j] < 0.0);
            if pinned {
                g[j] = 0.0;
                for k in 0..n {
                    a[(j, k)] = 0.0;
                    a[(k, j)] = 0.0;
                }
                a[(j, j)] = 1.0;
            }
        }

        let rnorm = (2.0 * cost).sqrt();
        let gcos = (0..n)
            .map(|j| {
                let cn = a[(j, j)].sqrt();
                if cn > 0.0 {
                    g[j].abs() / (cn * rnorm)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if gcos <= opts.gtol {
            converged = true;
            termination = "gradient orthogonal to residual".into();
            break;
        }

        // Per-parameter scaling, never shrinking (MINPACK mode 1).
        for j in 0..n {
            diag[j] = diag[j].max(a[(j, j)]);
        }

        loop {
            let mut lhs = a.clone();
            for j in 0..n {
                lhs[(j, j)] += lambda * diag[j];
            }
            let step = lhs.cholesky().map(|c| c.solve(&(-&g)));
            let Some(step) = step else {
                lambda *= nu;
                nu *= 2.0;
                if lambda > 1e20 {
                    termination = "damping system not positive definite".into();
                    break 'outer;
                }
                continue;
            };
            let trial: Vec<f64> = (0..n).map(|j| specs[j].clamp(p[j] + step[j])).collect();
            let taken = DVector::from_iterator(n, (0..n).map(|j| trial[j] - p[j]));
            let small_step = (0..n).all(|j| taken[j].abs() <= opts.xtol * p[j].abs().max(specs[j].scale));
            if small_step {
                converged = true;
                termination = "parameter change below tolerance".into();
                break 'outer;
            }
            let r_new = f(&trial).ok().filter(|v| v.len() == r.len() && all_finite(v));
            let cost_new = r_new.as_deref().map(half_norm2).unwrap_or(f64::INFINITY);
            if cost_new < cost {
                let predicted = -(g.dot(&taken) + 0.5 * taken.dot(&(&a * &taken)));
                let rho = if predicted > 0.0 {
                    (cost - cost_new) / predicted
                } else {
                    1.0
                };
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                let rel = (cost - cost_new) / cost;
                p = trial;
                r = r_new.expect("finite cost implies residuals");
                cost = cost_new;
                history.push(cost);
                if rel < opts.ftol {
                    converged = true;
                    termination = "relative objective change below tolerance".into();
                    break 'outer;
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e20 {
                // No descent left at machine precision; stationary if the
                // gradient is negligible.
                if gcos <= 1e-6 {
                    converged = true;
                    termination = "no further descent at machine precision".into();
                } else {
                    termination = "step stalled".into();
                }
                break 'outer;
            }
        }
    }

    let jacobian = jacobian(&f, &p, &r, specs, opts.fd_step)?;
    Ok(LmReport {
        params: p,
        residuals: r,
        jacobian,
        cost,
        iterations,
        converged,
        termination,
        history,
    })
}
