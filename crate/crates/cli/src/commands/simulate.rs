use std::f64::consts::TAU;

use mzq_core::physics::{domega01_dflux, gamma1_model, gamma_phi_model, omega01};
use mzq_core::{sweep, synthesize, OuNoise, QubitScatterer};
use rayon::prelude::*;

use crate::config::{read_json, FluxSweep, Manifest, ManifestEntry, SimulateConfig, SynthConfig};
use crate::failure::{CliResult, Failure};
use crate::output::{linspace, write_json, write_trace, Ctx};

pub fn simulate(ctx: &Ctx) -> CliResult<()> {
    let cfg: SimulateConfig = read_json(&ctx.config)?;
    cfg.validate()?;
    let mut trace = sweep(&cfg.circuit, &cfg.grid.freqs(), cfg.drive)?;
    trace.label = cfg.label.clone();
    write_trace(&ctx.out, &cfg.label, &trace)?;
    ctx.note(format!("wrote {}.csv and {}.json", cfg.label, cfg.label));
    Ok(())
}

pub fn synth(ctx: &Ctx) -> CliResult<()> {
    let cfg: SynthConfig = read_json(&ctx.config)?;
    cfg.validate()?;
    let seed = ctx.seed.unwrap_or(cfg.seed);
    if let Some(sweep_cfg) = &cfg.flux_sweep {
        return synth_flux_sweep(ctx, &cfg, sweep_cfg, seed);
    }
    let grid = cfg.grid.expect("validated");
    let mut trace = synthesize(&cfg.circuit, &grid.freqs(), cfg.drive, cfg.noise_sigma, seed)?;
    trace.label = cfg.label.clone();
    write_trace(&ctx.out, &cfg.label, &trace)?;
    ctx.note(format!("wrote {}.csv and {}.json", cfg.label, cfg.label));
    Ok(())
}

/// Qubit parameters at one flux bias.
fn qubit_at_flux(s: &FluxSweep, flux: f64) -> mzq_core::Result<QubitScatterer> {
    let w = omega01(&s.transmon, flux)?;
    let slope = domega01_dflux(&s.transmon, flux)?;
    let noise = OuNoise {
        sigma: s.flux_noise.sigma,
        kappa: s.flux_noise.kappa,
        slope,
    };
    let q = QubitScatterer {
        omega01: w,
        gamma1: gamma1_model(&s.bath, w),
        gamma_phi: gamma_phi_model(&noise)?,
        r0: s.r0,
        rabi: s.rabi,
    };
    q.validate()?;
    Ok(q)
}

fn synth_flux_sweep(ctx: &Ctx, cfg: &SynthConfig, s: &FluxSweep, seed: u64) -> CliResult<()> {
    let results: Vec<CliResult<ManifestEntry>> = s
        .fluxes
        .par_iter()
        .enumerate()
        .map(|(i, &flux)| {
            let stem = format!("{}_{i:03}", cfg.label);
            let run = || -> CliResult<ManifestEntry> {
                let q = qubit_at_flux(s, flux)?;
                let center = q.omega01 / TAU;
                let freqs = linspace(center - s.half_width_hz, center + s.half_width_hz, s.points);
                let spec = cfg.circuit.with_qubit(q);
                let mut trace = synthesize(&spec, &freqs, cfg.drive, cfg.noise_sigma, seed.wrapping_add(i as u64))?;
                trace.label = stem.clone();
                write_trace(&ctx.out, &stem, &trace)?;
                Ok(ManifestEntry {
                    file: format!("{stem}.csv").into(),
                    flux,
                    truth: Some(q),
                })
            };
            run().map_err(|e| e.context(format!("flux {flux}")))
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    write_json(&ctx.path("manifest.json"), &Manifest { traces: entries })?;
    ctx.note(format!("wrote {} traces and manifest.json", s.fluxes.len() - failures.len()));
    match Failure::combine(failures) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
