use std::path::Path;

use mzq_core::estimate::{fit_gamma1, fit_gamma_phi_power, fit_ou, gamma1_bath, FitResult, RATE_CSV_HEADER};
use mzq_core::physics::{domega01_dflux, gamma1_model, gamma_phi_model};
use mzq_core::trace::fmt_f64;
use mzq_core::{OuNoise, RateDataset, RateRow, TransmonParams};

use crate::config::{read_json, resolve, FitRatesConfig};
use crate::failure::{CliResult, Failure};
use crate::output::{linspace, write_json, write_table, Ctx};

fn write_rates(path: &Path, rows: &[RateRow]) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    RateDataset::new(rows.to_vec()).write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

/// Rows dropped by the relative-error filter, with the reason.
fn write_excluded(path: &Path, excluded: &[(RateRow, String)]) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header: Vec<&str> = RATE_CSV_HEADER.to_vec();
    header.push("reason");
    w.write_record(&header)?;
    for (r, reason) in excluded {
        let mut rec: Vec<String> = [r.omega01, r.gamma1, r.gamma_phi, r.flux, r.rel_err_gamma_phi]
            .iter()
            .map(|v| fmt_f64(*v))
            .collect();
        rec.push(reason.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Model value and 95% band on each grid point.
fn band<G>(fit: &FitResult, grid: &[f64], g: G) -> CliResult<Vec<Vec<f64>>>
where
    G: Fn(&[f64], f64) -> mzq_core::Result<f64>,
{
    grid.iter()
        .map(|&x| {
            let (v, half) = fit.prediction(|p| g(p, x))?;
            Ok(vec![x, v, v - half, v + half])
        })
        .collect()
}

fn abs_slope(t: &TransmonParams, flux: f64) -> mzq_core::Result<f64> {
    Ok(domega01_dflux(t, flux)?.abs())
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn fit_rates(ctx: &Ctx) -> CliResult<()> {
    let cfg: FitRatesConfig = read_json(&ctx.config)?;
    cfg.validate()?;
    let path = resolve(&ctx.config, &cfg.rates);
    let file = std::fs::File::open(&path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let data = RateDataset::read_csv(std::io::BufReader::new(file)).map_err(|e| Failure::from(e).context(path.display()))?;
    data.validate()?;
    if data.len() < cfg.options.min_rows {
        return Err(Failure::config(format!(
            "ill-posed fit: {} rows, at least {} required",
            data.len(),
            cfg.options.min_rows
        )));
    }
    let t = cfg.transmon;
    let n = cfg.curve_points;

    let filtered = data.filter(cfg.options.max_rel_err);
    write_rates(&ctx.path("rates_used.csv"), &filtered.kept.rows)?;
    write_excluded(&ctx.path("excluded.csv"), &filtered.excluded)?;
    ctx.note(format!(
        "{} rows kept for the dephasing fits, {} excluded",
        filtered.kept.len(),
        filtered.excluded.len()
    ));

    let mut failures = Vec::new();

    match fit_gamma1(&data, &cfg.options) {
        Ok(fit) => {
            write_json(&ctx.path("gamma1_fit.json"), &fit)?;
            let (lo, hi) = range(data.rows.iter().map(|r| r.omega01));
            let rows = band(&fit, &linspace(lo, hi, n), |p, w| Ok(gamma1_model(&gamma1_bath(p), w)))?;
            write_table(&ctx.path("gamma1_curve.csv"), &["omega01", "model", "lower95", "upper95"], &rows)?;
            ctx.note(format!("relaxation fit: alpha = {:e}", fit.params["alpha"]));
        }
        Err(e) => failures.push(Failure::from(e).context("relaxation fit")),
    }

    let slopes: Vec<f64> = filtered
        .kept
        .rows
        .iter()
        .filter_map(|r| abs_slope(&t, r.flux).ok())
        .collect();
    match fit_gamma_phi_power(&data, &t, &cfg.options) {
        Ok(fit) => {
            write_json(&ctx.path("power_fit.json"), &fit)?;
            let (lo, hi) = range(slopes.iter().copied());
            let rows = band(&fit, &linspace(lo, hi, n), |p, s| Ok(p[1].exp() * s.powf(p[0])))?;
            write_table(&ctx.path("power_curve.csv"), &["slope", "model", "lower95", "upper95"], &rows)?;
            ctx.note(format!("power-law fit: eta = {:.4}", fit.params["eta"]));
        }
        Err(e) => failures.push(Failure::from(e).context("power-law fit")),
    }

    match fit_ou(&data, &t, &cfg.options) {
        Ok(fit) => {
            write_json(&ctx.path("ou_fit.json"), &fit)?;
            let (lo, hi) = range(filtered.kept.rows.iter().map(|r| r.omega01));
            let rows = band(&fit, &linspace(lo, hi, n), |p, w| {
                let flux = t.flux_for_omega(w).ok_or_else(|| {
                    mzq_core::Error::InvalidParameter(format!("{w} rad/s is above the transmon maximum"))
                })?;
                gamma_phi_model(&OuNoise {
                    sigma: p[0],
                    kappa: p[1],
                    slope: abs_slope(&t, flux)?,
                })
            })?;
            write_table(&ctx.path("ou_curve.csv"), &["omega01", "model", "lower95", "upper95"], &rows)?;
            ctx.note(format!("flux-noise fit: sigma = {:e}", fit.params["sigma"]));
        }
        Err(e) => failures.push(Failure::from(e).context("flux-noise fit")),
    }

    match Failure::combine(failures) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
