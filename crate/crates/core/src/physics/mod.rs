//! Transmon spectrum, bath models and flux-noise dephasing.

pub mod bath;
pub mod ou;
pub mod transmon;

pub use bath::{
    alpha_res, dressed_frequencies, gamma1_model, kondo_alpha, spectral_density_ohmic, BathModel,
    CouplingParams,
};
pub use ou::{gamma_phi_model, ou_coherence, ou_spectrum, OuNoise};
pub use transmon::{domega01_dflux, omega01, TransmonParams};

/// CODATA 2018 SI values.
pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Vacuum permittivity, F/m.
    pub const EPSILON0: f64 = 8.854_187_812_8e-12;
    /// Speed of light in vacuum, m/s.
    pub const C: f64 = 299_792_458.0;
}
