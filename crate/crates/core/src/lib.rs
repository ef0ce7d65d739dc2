//! Transfer-matrix model of a superconducting qubit embedded in a microwave
//! Mach-Zehnder interferometer, with the physics of its decay channels and
//! the estimators that invert measured spectra.
//!
//! The crate is organised bottom-up:
//!
//! * [`netcore`] holds the 4×4 transfer-matrix algebra and the port solver.
//! * [`components`] builds the splitter, line and qubit matrices and sweeps
//!   the assembled circuit into a [`SpectrumTrace`].
//! * [`physics`] provides the transmon spectrum, the bath models behind
//!   relaxation and the Ornstein-Uhlenbeck flux-noise dephasing model.
//! * [`estimate`] fits spectra and rate datasets.

pub mod components;
pub mod error;
pub mod estimate;
pub mod netcore;
pub mod physics;
pub mod trace;

pub use components::{
    circuit_matrix, scatter_at, sweep, synthesize, BeamSplitterModel, Calibration, CircuitSpec, Drive,
    LineParams, QubitArm, QubitMatrixForm, QubitScatterer,
};
pub use error::{Error, Result};
pub use estimate::{FitResult, RateDataset, RateRow, RegimeLabel};
pub use netcore::{cascade, solve_ports, Complex, PortVector, ScatterSolution, TransferMatrix4};
pub use physics::{BathModel, OuNoise, TransmonParams};
pub use trace::{Path, SpectrumTrace};
