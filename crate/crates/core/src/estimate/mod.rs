//! Inverse problems: spectrum fits, regime classification and the
//! second-stage fits of relaxation and dephasing rates.

pub mod lm;
mod rates;
mod regime;
mod result;
mod spectrum;

pub use rates::{
    fit_gamma1, fit_gamma_phi_power, fit_ou, gamma1_bath, FilterOutcome, Gamma1Weighting, RateDataset,
    RateFitOptions, RateRow, GAMMA1_PARAMS, OU_PARAMS, POWER_PARAMS, RATE_CSV_HEADER,
};
pub use regime::{classify_regime, RegimeLabel};
pub use result::FitResult;
pub use spectrum::{fit_spectrum, initial_guess, R0Mode, SpectrumFit, SpectrumFitOptions};
