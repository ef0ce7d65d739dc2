mod classify;
mod fit_rates;
mod fit_spectrum;
mod simulate;

pub use classify::classify;
pub use fit_rates::fit_rates;
pub use fit_spectrum::fit_spectrum;
pub use simulate::{simulate, synth};
