use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::SpectrumTrace;

/// Shape of the resonance in the cross-transmission magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    PeakDip,
    Dip,
    DipPeak,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::PeakDip => "PeakDip",
            RegimeLabel::Dip => "Dip",
            RegimeLabel::DipPeak => "DipPeak",
        }
    }

    /// Asymmetric Fano-type shape, in either order.
    pub fn is_peak_dip_family(self) -> bool {
        !matches!(self, RegimeLabel::Dip)
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegimeLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "PeakDip" => Ok(RegimeLabel::PeakDip),
            "Dip" => Ok(RegimeLabel::Dip),
            "DipPeak" => Ok(RegimeLabel::DipPeak),
            other => Err(format!("unknown regime '{other}'")),
        }
    }
}

/// Fraction of points at each end of the window used for the background.
const EDGE_FRACTION: f64 = 0.15;
/// Excursions must exceed this multiple of the noise floor.
const NOISE_MULTIPLE: f64 = 3.0;
/// Excursions must exceed this fraction of the mean background level.
const MIN_RELATIVE_FEATURE: f64 = 1e-3;
/// A peak smaller than this fraction of the dip does not count.
const DIP_ONLY_RATIO: f64 = 0.2;

/// Labels the lineshape of the cross-transmission magnitude.
///
/// A straight line through the outer points of the window serves as the
/// interferometer background. The noise floor is estimated from the median
/// absolute second difference of the detrended magnitude.
pub fn classify_regime(trace: &SpectrumTrace) -> Result<RegimeLabel> {
    trace.validate()?;
    let path = trace
        .cross_path()
        .ok_or_else(|| Error::InvalidParameter("trace has no cross path (s12 or s34)".into()))?;
    let mags: Vec<f64> = trace.get(path).expect("present").iter().map(|z| z.norm()).collect();
    classify_magnitudes(&trace.freqs, &mags)
}

pub(crate) fn classify_magnitudes(freqs: &[f64], mags: &[f64]) -> Result<RegimeLabel> {
    let n = freqs.len();
    if n < 10 {
        return Err(Error::InvalidParameter(format!(
            "regime classification needs at least 10 points, got {n}"
        )));
    }
    let detrended = detrend(freqs, mags);

    let mut second: Vec<f64> = detrended
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs())
        .collect();
    second.sort_by(f64::total_cmp);
    let mad = second[second.len() / 2];
    let noise = mad / 0.6745 / 6f64.sqrt();
    let mean = mags.iter().sum::<f64>() / n as f64;
    let floor = (NOISE_MULTIPLE * noise).max(MIN_RELATIVE_FEATURE * mean);

    let (i_max, &peak) = detrended
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let (i_min, &trough) = detrended
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let dip = -trough;
    if peak.max(dip) <= floor {
        return Err(Error::NoFeature);
    }
    if peak < DIP_ONLY_RATIO * dip {
        return Ok(RegimeLabel::Dip);
    }
    Ok(if freqs[i_max] < freqs[i_min] {
        RegimeLabel::PeakDip
    } else {
        RegimeLabel::DipPeak
    })
}

/// Subtracts a least-squares line through the outer points of the window.
fn detrend(freqs: &[f64], mags: &[f64]) -> Vec<f64> {
    let n = freqs.len();
    let k = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(2);
    let idx: Vec<usize> = (0..k).chain(n - k..n).collect();
    let f0 = freqs[0];
    let span = freqs[n - 1] - f0;
    let x = |i: usize| (freqs[i] - f0) / span;
    let m = idx.len() as f64;
    let mx = idx.iter().map(|&i| x(i)).sum::<f64>() / m;
    let my = idx.iter().map(|&i| mags[i]).sum::<f64>() / m;
    let sxy: f64 = idx.iter().map(|&i| (x(i) - mx) * (mags[i] - my)).sum();
    let sxx: f64 = idx.iter().map(|&i| (x(i) - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (0..n).map(|i| mags[i] - (my + slope * (x(i) - mx))).collect()
}
