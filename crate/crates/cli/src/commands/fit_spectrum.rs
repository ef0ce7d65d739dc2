use std::path::{Path, PathBuf};

use mzq_core::estimate::{self, initial_guess, SpectrumFitOptions};
use mzq_core::{CircuitSpec, Error, QubitScatterer, RateDataset, RateRow, SpectrumTrace};
use rayon::prelude::*;

use crate::config::{read_json, resolve, FitSpectrumConfig, Manifest};
use crate::failure::{CliResult, Failure};
use crate::output::{write_json, Ctx};

/// Shared fit settings.
struct Fitter {
    template: CircuitSpec,
    rabi: f64,
    options: SpectrumFitOptions,
    initial: Option<QubitScatterer>,
}

impl Fitter {
    /// Fits one trace and writes `<stem>_fit.json`, `<stem>_model.csv` and
    /// `<stem>_residuals.csv`. On non-convergence the unconverged estimate
    /// goes to `<stem>_unconverged.json` for diagnosis.
    fn run(&self, ctx: &Ctx, file: &Path) -> CliResult<estimate::FitResult> {
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Failure::config(format!("{}: no file name", file.display())))?
            .to_string();
        let trace = SpectrumTrace::load(file).map_err(|e| Failure::from(e).context(file.display()))?;
        let init = match self.initial {
            Some(q) => q,
            None => initial_guess(&trace, &self.template, self.rabi)?,
        };
        match estimate::fit_spectrum(&trace, &self.template, &init, &self.options) {
            Ok(fit) => {
                write_json(&ctx.path(&format!("{stem}_fit.json")), &fit.result)?;
                let mut model = fit.model.clone();
                model.label = format!("{stem}_model");
                write_csv(&ctx.path(&format!("{stem}_model.csv")), &model)?;
                let mut resid = fit.residual_trace(&trace);
                resid.label = format!("{stem}_residuals");
                write_csv(&ctx.path(&format!("{stem}_residuals.csv")), &resid)?;
                ctx.note(format!("{stem}: converged after {} iterations", fit.result.iterations));
                Ok(fit.result)
            }
            Err(e @ Error::NoConvergence { .. }) => {
                let relaxed = SpectrumFitOptions {
                    allow_unconverged: true,
                    ..self.options
                };
                if let Ok(fit) = estimate::fit_spectrum(&trace, &self.template, &init, &relaxed) {
                    write_json(&ctx.path(&format!("{stem}_unconverged.json")), &fit.result)?;
                }
                Err(Failure::from(e).context(stem))
            }
            Err(e) => Err(Failure::from(e).context(stem)),
        }
    }
}

fn write_csv(path: &Path, trace: &SpectrumTrace) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

pub fn fit_spectrum(ctx: &Ctx) -> CliResult<()> {
    let cfg: FitSpectrumConfig = read_json(&ctx.config)?;
    cfg.validate()?;
    let fitter = Fitter {
        template: CircuitSpec { qubit: None, ..cfg.circuit },
        rabi: cfg.rabi,
        options: cfg.options,
        initial: cfg.initial,
    };
    if let Some(trace) = &cfg.trace {
        fitter.run(ctx, &resolve(&ctx.config, trace))?;
        return Ok(());
    }
    let manifest_path = resolve(&ctx.config, cfg.manifest.as_ref().expect("validated"));
    let manifest: Manifest = read_json(&manifest_path)?;
    let files: Vec<PathBuf> = manifest
        .traces
        .iter()
        .map(|e| resolve(&manifest_path, &e.file))
        .collect();
    let results: Vec<CliResult<estimate::FitResult>> = files.par_iter().map(|f| fitter.run(ctx, f)).collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in manifest.traces.iter().zip(results) {
        match result {
            Ok(r) => rows.push(RateRow {
                omega01: r.params["omega01"],
                gamma1: r.params["gamma1"],
                gamma_phi: r.params["gamma_phi"],
                flux: entry.flux,
                rel_err_gamma_phi: r.rel_err["gamma_phi"],
            }),
            Err(f) => failures.push(f),
        }
    }
    let path = ctx.path("rates.csv");
    let file = std::fs::File::create(&path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    RateDataset::new(rows).write_csv(std::io::BufWriter::new(file))?;
    ctx.note(format!(
        "wrote rates.csv with {} of {} traces",
        manifest.traces.len() - failures.len(),
        manifest.traces.len()
    ));
    match Failure::combine(failures) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
