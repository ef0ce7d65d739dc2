//! Component transfer matrices and the assembled interferometer.
//!
//! The circuit is always `BS · TL · Q · TL · BS`: a beam splitter, a pair of
//! line segments, the qubit scatterer in one arm, a second pair of line
//! segments and a second beam splitter. Index pairs `(0, 1)` and `(2, 3)` of
//! the transfer matrix carry the two arms; within each pair the first index is
//! the wave travelling from the right-hand ports towards the left-hand ports.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{cascade, Complex, ScatterSolution, TransferMatrix4};
use crate::trace::{Path, SpectrumTrace};

/// Below this transmission modulus the qubit transfer matrix is rejected.
pub const T_MIN: f64 = 1e-9;

/// Per-index line parameters for one segment on each side of the qubit.
///
/// Entry `k` contributes `exp(i·c_k)` on the diagonal with
/// `c_k = i·attenuation[k] + phase_rate[k]·f`, `f` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineParams {
    /// Radians per Hz.
    pub phase_rate: [f64; 4],
    /// Dimensionless amplitude attenuation, `≥ 0`.
    #[serde(default)]
    pub attenuation: [f64; 4],
}

impl Default for LineParams {
    fn default() -> Self {
        Self {
            phase_rate: [0.0; 4],
            attenuation: [0.0; 4],
        }
    }
}

impl LineParams {
    /// Lossless segments with the given one-way delays (seconds) per arm.
    ///
    /// The wave travelling towards the left ports picks up `+2π f τ`, the
    /// counter-propagating wave `-2π f τ`.
    pub fn lossless_arms(delay_a: f64, delay_b: f64) -> Self {
        Self {
            phase_rate: [TAU * delay_a, -TAU * delay_a, TAU * delay_b, -TAU * delay_b],
            attenuation: [0.0; 4],
        }
    }

    /// Arms balanced at `center_hz`: arm `a` is longer by `extra_wavelengths`
    /// wavelengths at the center frequency, summed over both segments.
    /// A negative value makes arm `b` the longer one.
    pub fn imbalanced(center_hz: f64, extra_wavelengths: f64) -> Self {
        let half = extra_wavelengths / (2.0 * center_hz);
        if half >= 0.0 {
            Self::lossless_arms(half, 0.0)
        } else {
            Self::lossless_arms(0.0, -half)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .phase_rate
            .iter()
            .chain(&self.attenuation)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("line parameters"));
        }
        if self.attenuation.iter().any(|&r| r < 0.0) {
            return Err(Error::InvalidParameter("line attenuation must be >= 0".into()));
        }
        Ok(())
    }
}

/// Beam splitter transfer model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BeamSplitterModel {
    /// Frequency-independent 50:50 splitter.
    Ideal,
    /// Single-section branch-line coupler with quarter-wave arms at
    /// `center_omega` (rad/s).
    BranchLine { center_omega: f64 },
}

/// Two-level scatterer parameters. All rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitScatterer {
    pub omega01: f64,
    pub gamma1: f64,
    pub gamma_phi: f64,
    /// Maximum reflection amplitude, in `(0, 1]`.
    pub r0: f64,
    /// Rabi frequency of the probe.
    #[serde(default)]
    pub rabi: f64,
}

impl QubitScatterer {
    pub fn gamma2(&self) -> f64 {
        0.5 * self.gamma1 + self.gamma_phi
    }

    pub fn validate(&self) -> Result<()> {
        let q = self;
        if ![q.omega01, q.gamma1, q.gamma_phi, q.r0, q.rabi]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("qubit parameters"));
        }
        if q.omega01 <= 0.0 {
            return Err(Error::InvalidParameter("omega01 must be > 0".into()));
        }
        if q.gamma1 < 0.0 || q.gamma_phi < 0.0 || q.rabi < 0.0 {
            return Err(Error::InvalidParameter(
                "gamma1, gamma_phi and rabi must be >= 0".into(),
            ));
        }
        if q.gamma2() <= 0.0 {
            return Err(Error::InvalidParameter("gamma2 must be > 0".into()));
        }
        if !(q.r0 > 0.0 && q.r0 <= 1.0) {
            return Err(Error::InvalidParameter("r0 must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Which interferometer arm hosts the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitArm {
    #[default]
    ArmA,
    ArmB,
}

/// Form of the qubit's 2×2 transfer block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitMatrixForm {
    /// `[[(t² − r²)/t, r/t], [−r/t, 1/t]]`, the reciprocal point scatterer.
    #[default]
    Reciprocal,
    /// `[[−r²/t, r/t], [−r/t, 1/t]]`, without the direct `t` term in the
    /// upper-left entry. Kept for comparison; it is not transparent at `r = 0`.
    NoDirectTerm,
}

/// Complex gain and cable delay applied to every simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    #[serde(default = "unit_scale")]
    pub scale: Complex,
    /// Seconds; multiplies the trace by `exp(-2πi f delay)`.
    #[serde(default)]
    pub delay: f64,
}

fn unit_scale() -> Complex {
    Complex::new(1.0, 0.0)
}

impl Calibration {
    pub fn factor(&self, freq_hz: f64) -> Complex {
        self.scale * Complex::from_polar(1.0, -TAU * freq_hz * self.delay)
    }
}

/// The full interferometer description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub splitter: BeamSplitterModel,
    #[serde(default)]
    pub lines: LineParams,
    #[serde(default)]
    pub qubit: Option<QubitScatterer>,
    #[serde(default)]
    pub qubit_arm: QubitArm,
    #[serde(default)]
    pub qubit_form: QubitMatrixForm,
    #[serde(default)]
    pub calibration: Option<Calibration>,
}

impl CircuitSpec {
    /// Ideal splitters and lossless arms balanced at `center_hz`, with the
    /// qubit in arm `a` and arm `b` two wavelengths longer at the center
    /// frequency.
    pub fn mach_zehnder(center_hz: f64) -> Self {
        Self {
            splitter: BeamSplitterModel::Ideal,
            lines: LineParams::imbalanced(center_hz, -2.0),
            qubit: None,
            qubit_arm: QubitArm::ArmA,
            qubit_form: QubitMatrixForm::Reciprocal,
            calibration: None,
        }
    }

    pub fn with_qubit(mut self, q: QubitScatterer) -> Self {
        self.qubit = Some(q);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.lines.validate()?;
        if let BeamSplitterModel::BranchLine { center_omega } = self.splitter {
            if !(center_omega.is_finite() && center_omega > 0.0) {
                return Err(Error::InvalidParameter(
                    "branch-line center_omega must be > 0".into(),
                ));
            }
        }
        if let Some(q) = &self.qubit {
            q.validate()?;
        }
        if let Some(cal) = &self.calibration {
            if !(cal.scale.is_finite() && cal.delay.is_finite()) {
                return Err(Error::NonFinite("calibration"));
            }
        }
        Ok(())
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")))
    }
}

/// Diagonal line-segment matrix at angular frequency `omega`.
pub fn tl_matrix(p: &LineParams, omega: f64) -> Result<TransferMatrix4> {
    check_omega(omega)?;
    p.validate()?;
    let f = omega / TAU;
    let mut d = [Complex::new(0.0, 0.0); 4];
    for (k, dk) in d.iter_mut().enumerate() {
        let c = Complex::new(p.phase_rate[k] * f, p.attenuation[k]);
        *dk = (Complex::i() * c).exp();
    }
    TransferMatrix4::diagonal(d)
}

fn ideal_splitter() -> TransferMatrix4 {
    let s = FRAC_1_SQRT_2;
    let z = Complex::new(0.0, 0.0);
    let re = |x: f64| Complex::new(x, 0.0);
    let im = |x: f64| Complex::new(0.0, x);
    TransferMatrix4::from_rows([
        [im(-s), z, re(-s), z],
        [z, im(s), z, re(-s)],
        [re(-s), z, im(-s), z],
        [z, re(-s), z, im(s)],
    ])
    .expect("constant matrix is finite")
}

/// Beam splitter transfer matrix at angular frequency `omega`.
pub fn bs_matrix(b: &BeamSplitterModel, omega: f64) -> Result<TransferMatrix4> {
    check_omega(omega)?;
    match *b {
        BeamSplitterModel::Ideal => Ok(ideal_splitter()),
        BeamSplitterModel::BranchLine { center_omega } => {
            check_omega(center_omega)?;
            branch_line(0.5 * PI * omega / center_omega)
        }
    }
}

type Mat2 = [[Complex; 2]; 2];

fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat2_inv(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() < 1e-300 {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

/// Even/odd-mode reflection and transmission of the symmetric branch-line
/// half circuit; `theta` is the electrical length of the series arms.
fn branch_line_modes(theta: f64) -> [(Complex, Complex); 2] {
    let j = Complex::i();
    let z_series = FRAC_1_SQRT_2;
    let line: Mat2 = [
        [Complex::new(theta.cos(), 0.0), j * z_series * theta.sin()],
        [j * theta.sin() / z_series, Complex::new(theta.cos(), 0.0)],
    ];
    let half = 0.5 * theta;
    let stubs = [j * half.tan(), -j / half.tan()];
    stubs.map(|y| {
        let shunt: Mat2 = [
            [Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            [y, Complex::new(1.0, 0.0)],
        ];
        let abcd = mat2_mul(&mat2_mul(&shunt, &line), &shunt);
        let [[a, b], [c, d]] = abcd;
        let denom = a + b + c + d;
        ((a + b - c - d) / denom, 2.0 / denom)
    })
}

fn branch_line(theta: f64) -> Result<TransferMatrix4> {
    let [(ge, te), (go, to)] = branch_line_modes(theta);
    let refl = 0.5 * (ge + go);
    let iso = 0.5 * (ge - go);
    let thru = 0.5 * (te + to);
    let coup = 0.5 * (te - to);
    // Left ports (A, B), right ports (C, D): A–C and B–D through,
    // A–D and B–C coupled, A–B and C–D isolated.
    let s_same: Mat2 = [[refl, iso], [iso, refl]];
    let s_cross: Mat2 = [[thru, coup], [coup, thru]];
    s_parameters_to_transfer(&s_same, &s_cross, &s_cross, &s_same)
}

/// Converts a 4-port scattering matrix, partitioned into left/right blocks,
/// into the interleaved transfer form.
fn s_parameters_to_transfer(
    s_ll: &Mat2,
    s_lr: &Mat2,
    s_rl: &Mat2,
    s_rr: &Mat2,
) -> Result<TransferMatrix4> {
    let r = mat2_inv(s_rl).ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
    })?;
    let p = mat2_mul(s_ll, &r);
    let p_srr = mat2_mul(&p, s_rr);
    let r_srr = mat2_mul(&r, s_rr);
    let mut m = [[Complex::new(0.0, 0.0); 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            m[2 * a][2 * b] = s_lr[a][b] - p_srr[a][b];
            m[2 * a][2 * b + 1] = p[a][b];
            m[2 * a + 1][2 * b] = -r_srr[a][b];
            m[2 * a + 1][2 * b + 1] = r[a][b];
        }
    }
    TransferMatrix4::from_rows(m)
}

/// Reflection and transmission amplitudes of the qubit at `omega`.
pub fn qubit_rt(q: &QubitScatterer, omega: f64) -> Result<(Complex, Complex)> {
    let gamma2 = q.gamma2();
    if !(gamma2 > 0.0) {
        return Err(Error::InvalidParameter("gamma2 must be > 0".into()));
    }
    let x = (omega - q.omega01) / gamma2;
    let saturation = if q.rabi == 0.0 {
        0.0
    } else {
        q.rabi * q.rabi / (q.gamma1 * gamma2)
    };
    let r = q.r0 * Complex::new(1.0, -x) / (1.0 + x * x + saturation);
    let r = if r.is_finite() { r } else { Complex::new(0.0, 0.0) };
    Ok((r, Complex::new(1.0, 0.0) - r))
}

/// Transfer matrix of the qubit placed in `arm`; the other arm is unity.
pub fn qubit_matrix(
    q: &QubitScatterer,
    omega: f64,
    arm: QubitArm,
    form: QubitMatrixForm,
) -> Result<TransferMatrix4> {
    let (r, t) = qubit_rt(q, omega)?;
    qubit_block_matrix(r, t, arm, form)
}

/// Embeds the scattering pair `(r, t)` as a 2×2 transfer block.
pub fn qubit_block_matrix(
    r: Complex,
    t: Complex,
    arm: QubitArm,
    form: QubitMatrixForm,
) -> Result<TransferMatrix4> {
    if t.norm() < T_MIN {
        return Err(Error::DegenerateScatterer { t_abs: t.norm() });
    }
    let upper_left = match form {
        QubitMatrixForm::Reciprocal => (t * t - r * r) / t,
        QubitMatrixForm::NoDirectTerm => -(r * r) / t,
    };
    let block = [[upper_left, r / t], [-r / t, 1.0 / t]];
    let off = match arm {
        QubitArm::ArmA => 0,
        QubitArm::ArmB => 2,
    };
    let mut m = *TransferMatrix4::identity().rows();
    for i in 0..2 {
        for j in 0..2 {
            m[off + i][off + j] = block[i][j];
        }
    }
    TransferMatrix4::from_rows(m)
}

/// Total transfer matrix `BS · TL · Q · TL · BS` at angular frequency `omega`.
pub fn circuit_matrix(spec: &CircuitSpec, omega: f64) -> Result<TransferMatrix4> {
    let bs = bs_matrix(&spec.splitter, omega)?;
    let tl = tl_matrix(&spec.lines, omega)?;
    let q = match &spec.qubit {
        Some(q) => qubit_matrix(q, omega, spec.qubit_arm, spec.qubit_form)?,
        None => TransferMatrix4::identity(),
    };
    cascade(&[bs, tl, q, tl, bs])
}

/// S-parameters of the circuit at a single frequency in Hz, calibration applied.
pub fn scatter_at(spec: &CircuitSpec, freq_hz: f64) -> Result<ScatterSolution> {
    let total = circuit_matrix(spec, TAU * freq_hz)?;
    let mut s = ScatterSolution::from_total(&total)?;
    if let Some(cal) = &spec.calibration {
        let k = cal.factor(freq_hz);
        for z in [
            &mut s.s12, &mut s.s32, &mut s.s34, &mut s.s14, &mut s.s22, &mut s.s42, &mut s.s44,
            &mut s.s24,
        ] {
            *z *= k;
        }
    }
    Ok(s)
}

/// Which input port(s) are driven in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// Paths `s12` (cross) and `s32` (through).
    #[default]
    Port2,
    /// Paths `s34` (cross) and `s14` (through).
    Port4,
    Both,
}

impl Drive {
    pub fn paths(self) -> &'static [Path] {
        match self {
            Drive::Port2 => &[Path::S12, Path::S32],
            Drive::Port4 => &[Path::S34, Path::S14],
            Drive::Both => &[Path::S12, Path::S32, Path::S34, Path::S14],
        }
    }
}

pub(crate) fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidParameter("frequency grid is empty".into()));
    }
    if freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::InvalidParameter(
            "frequencies must be finite and > 0".into(),
        ));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "frequencies must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Evaluates the circuit on a frequency grid (Hz).
pub fn sweep(spec: &CircuitSpec, freqs: &[f64], drive: Drive) -> Result<SpectrumTrace> {
    spec.validate()?;
    check_grid(freqs)?;
    let paths = drive.paths();
    let mut columns: Vec<Vec<Complex>> = vec![Vec::with_capacity(freqs.len()); paths.len()];
    for &f in freqs {
        let s = scatter_at(spec, f).map_err(|e| e.at_frequency(f))?;
        for (col, path) in columns.iter_mut().zip(paths) {
            col.push(path.select(&s));
        }
    }
    let mut trace = SpectrumTrace::new(freqs.to_vec(), String::new());
    for (path, col) in paths.iter().zip(columns) {
        trace.insert(*path, col)?;
    }
    Ok(trace)
}

/// [`sweep`] plus i.i.d. complex Gaussian noise of standard deviation
/// `noise_sigma` per quadrature, drawn from a generator seeded with `seed`.
pub fn synthesize(
    spec: &CircuitSpec,
    freqs: &[f64],
    drive: Drive,
    noise_sigma: f64,
    seed: u64,
) -> Result<SpectrumTrace> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
    }
    let mut trace = sweep(spec, freqs, drive)?;
    trace.noise_sigma = noise_sigma;
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).expect("sigma checked above");
        for values in trace.paths.values_mut() {
            for z in values.iter_mut() {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                *z += Complex::new(re, im);
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit(omega01: f64) -> QubitScatterer {
        QubitScatterer {
            omega01,
            gamma1: TAU * 1e6,
            gamma_phi: TAU * 0.5e6,
            r0: 1.0,
            rabi: 0.0,
        }
    }

    #[test]
    fn tl_identity_and_half_wave() {
        let omega = TAU * 5e9;
        let m = tl_matrix(&LineParams::default(), omega).unwrap();
        assert_eq!(m, TransferMatrix4::identity());

        let f = omega / TAU;
        let p = LineParams {
            phase_rate: [PI / f; 4],
            attenuation: [0.0; 4],
        };
        let m = tl_matrix(&p, omega).unwrap();
        for k in 0..4 {
            assert!((m.get(k, k) - Complex::new(-1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn tl_attenuation() {
        let mut p = LineParams::default();
        p.attenuation[0] = 0.1;
        let m = tl_matrix(&p, TAU * 5e9).unwrap();
        assert!((m.get(0, 0).norm() - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tl_rejects_negative_attenuation_and_omega() {
        let mut p = LineParams::default();
        p.attenuation[2] = -0.1;
        assert!(tl_matrix(&p, 1.0).is_err());
        assert!(tl_matrix(&LineParams::default(), 0.0).is_err());
    }

    #[test]
    fn ideal_splitter_entries() {
        let m = bs_matrix(&BeamSplitterModel::Ideal, 1.0).unwrap();
        let s = FRAC_1_SQRT_2;
        assert_eq!(m.get(0, 0), Complex::new(0.0, -s));
        assert_eq!(m.get(0, 2), Complex::new(-s, 0.0));
        assert_eq!(m.get(1, 1), Complex::new(0.0, s));
        assert_eq!(m.get(3, 3), Complex::new(0.0, s));
    }

    #[test]
    fn branch_line_matches_ideal_at_center() {
        let w = TAU * 5.746e9;
        let bl = bs_matrix(&BeamSplitterModel::BranchLine { center_omega: w }, w).unwrap();
        let ideal = bs_matrix(&BeamSplitterModel::Ideal, w).unwrap();
        assert!(bl.max_rel_diff(&ideal) < 1e-9);
    }

    #[test]
    fn qubit_rt_on_resonance_and_far() {
        let q = qubit(TAU * 5e9);
        let (r, t) = qubit_rt(&q, q.omega01).unwrap();
        assert_eq!(r, Complex::new(1.0, 0.0));
        assert_eq!(t, Complex::new(0.0, 0.0));
        let (r, t) = qubit_rt(&q, q.omega01 + 1e9 * q.gamma2()).unwrap();
        assert!(r.norm() < 1e-8);
        assert!((t - 1.0).norm() < 1e-8);
    }

    #[test]
    fn qubit_rt_at_one_linewidth() {
        let q = qubit(TAU * 5e9);
        let (r, _) = qubit_rt(&q, q.omega01 + q.gamma2()).unwrap();
        // detuning of one linewidth is rounded at the 1e-13 level next to ω₀₁
        assert!((r - Complex::new(0.5, -0.5)).norm() < 1e-12);
        assert!((r.norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qubit_block_examples() {
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        for form in [QubitMatrixForm::Reciprocal, QubitMatrixForm::NoDirectTerm] {
            let m = qubit_block_matrix(zero, one, QubitArm::ArmA, form).unwrap();
            if form == QubitMatrixForm::Reciprocal {
                assert_eq!(m, TransferMatrix4::identity());
            } else {
                assert_eq!(m.get(0, 0), zero);
            }
        }
        let half = Complex::new(0.5, 0.0);
        let m = qubit_block_matrix(half, half, QubitArm::ArmA, QubitMatrixForm::NoDirectTerm)
            .unwrap();
        let expect = [[-0.5, 1.0], [-1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.get(i, j) - expect[i][j]).norm() < 1e-15);
            }
        }
        let m =
            qubit_block_matrix(half, half, QubitArm::ArmB, QubitMatrixForm::Reciprocal).unwrap();
        assert_eq!(m.get(2, 2), zero);
        assert_eq!(m.get(2, 3), one);
        assert_eq!(m.get(0, 0), one);
    }

    #[test]
    fn nearly_full_reflection_is_finite() {
        let mut q = qubit(TAU * 5e9);
        q.r0 = 0.99;
        let m = qubit_matrix(&q, q.omega01, QubitArm::ArmA, Default::default()).unwrap();
        assert!((m.get(1, 1) - Complex::new(100.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn full_reflection_is_degenerate() {
        let q = qubit(TAU * 5e9);
        let err = qubit_matrix(&q, q.omega01, QubitArm::ArmA, Default::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateScatterer { .. }));
    }

    #[test]
    fn sweep_reports_offending_frequency() {
        let q = qubit(TAU * 5e9);
        let spec = CircuitSpec::mach_zehnder(5.746e9).with_qubit(q);
        let err = sweep(&spec, &[4.9e9, 5e9, 5.1e9], Drive::Port2).unwrap_err();
        match err {
            Error::AtFrequency { freq_hz, source } => {
                assert_eq!(freq_hz, 5e9);
                assert!(matches!(*source, Error::DegenerateScatterer { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let spec = CircuitSpec::mach_zehnder(5.746e9);
        assert!(sweep(&spec, &[5e9, 4e9], Drive::Port2).is_err());
        assert!(sweep(&spec, &[5e9, 5e9], Drive::Port2).is_err());
    }

    #[test]
    fn synthesize_without_noise_equals_sweep() {
        let spec = CircuitSpec::mach_zehnder(5.746e9).with_qubit(QubitScatterer {
            r0: 0.8,
            ..qubit(TAU * 5.8e9)
        });
        let freqs: Vec<f64> = (0..50).map(|k| 5.79e9 + 1e6 * k as f64).collect();
        let a = sweep(&spec, &freqs, Drive::Both).unwrap();
        let b = synthesize(&spec, &freqs, Drive::Both, 0.0, 7).unwrap();
        assert_eq!(a.paths, b.paths);
    }

    #[test]
    fn calibration_scales_trace() {
        let mut spec = CircuitSpec::mach_zehnder(5.746e9);
        let plain = scatter_at(&spec, 5e9).unwrap();
        spec.calibration = Some(Calibration {
            scale: Complex::new(0.0, 2.0),
            delay: 0.0,
        });
        let cal = scatter_at(&spec, 5e9).unwrap();
        assert!((cal.s12 - plain.s12 * Complex::new(0.0, 2.0)).norm() < 1e-12);
    }
}
