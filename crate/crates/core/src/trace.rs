//! Spectrum traces and their CSV / JSON representations.
//!
//! CSV layout is long-form with header `freq_hz,re,im,path,label`, one row per
//! frequency per path, numbers written with 17 significant digits so that a
//! write/read cycle is bit-exact. The JSON mirror additionally carries
//! `noise_sigma`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Complex, ScatterSolution};

pub const CSV_HEADER: [&str; 5] = ["freq_hz", "re", "im", "path", "label"];

/// Measurement path `S_ij`: output port `i`, drive port `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    S12,
    S32,
    S34,
    S14,
}

impl Path {
    pub const ALL: [Path; 4] = [Path::S12, Path::S32, Path::S34, Path::S14];

    pub fn is_cross(self) -> bool {
        matches!(self, Path::S12 | Path::S34)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Path::S12 => "s12",
            Path::S32 => "s32",
            Path::S34 => "s34",
            Path::S14 => "s14",
        }
    }

    pub fn select(self, s: &ScatterSolution) -> Complex {
        match self {
            Path::S12 => s.s12,
            Path::S32 => s.s32,
            Path::S34 => s.s34,
            Path::S14 => s.s14,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Path {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s12" => Ok(Path::S12),
            "s32" => Ok(Path::S32),
            "s34" => Ok(Path::S34),
            "s14" => Ok(Path::S14),
            other => Err(format!("unknown path '{other}'")),
        }
    }
}

/// Complex transmission per path on a shared frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTrace {
    pub label: String,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Hz, strictly increasing.
    pub freqs: Vec<f64>,
    pub paths: BTreeMap<Path, Vec<Complex>>,
}

impl SpectrumTrace {
    pub fn new(freqs: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            noise_sigma: 0.0,
            freqs,
            paths: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, path: Path, values: Vec<Complex>) -> Result<()> {
        if values.len() != self.freqs.len() {
            return Err(Error::InvalidParameter(format!(
                "path {path} has {} values for {} frequencies",
                values.len(),
                self.freqs.len()
            )));
        }
        self.paths.insert(path, values);
        Ok(())
    }

    pub fn get(&self, path: Path) -> Option<&[Complex]> {
        self.paths.get(&path).map(Vec::as_slice)
    }

    /// First available cross path (`s12` preferred over `s34`).
    pub fn cross_path(&self) -> Option<Path> {
        [Path::S12, Path::S34]
            .into_iter()
            .find(|p| self.paths.contains_key(p))
    }

    pub fn validate(&self) -> Result<()> {
        crate::components::check_grid(&self.freqs)?;
        for (path, values) in &self.paths {
            if values.len() != self.freqs.len() {
                return Err(Error::InvalidParameter(format!(
                    "path {path} is not length-matched to the frequency grid"
                )));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_io)?;
        for (path, values) in &self.paths {
            for (f, z) in self.freqs.iter().zip(values) {
                w.write_record([
                    fmt_f64(*f).as_str(),
                    fmt_f64(z.re).as_str(),
                    fmt_f64(z.im).as_str(),
                    path.as_str(),
                    self.label.as_str(),
                ])
                .map_err(csv_io)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the long-form CSV. Errors carry 1-based line numbers.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = rdr.headers().map_err(|e| csv_parse(e, 1))?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{}'", CSV_HEADER.join(",")),
            });
        }
        let mut label: Option<String> = None;
        let mut columns: BTreeMap<Path, (Vec<f64>, Vec<Complex>)> = BTreeMap::new();
        for (idx, record) in rdr.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| csv_parse(e, line))?;
            if record.len() != 5 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 5 fields, found {}", record.len()),
                });
            }
            let num = |i: usize, name: &str| -> Result<f64> {
                let v: f64 = record[i].parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid {name} '{}'", &record[i]),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse {
                        line,
                        message: format!("non-finite {name}"),
                    })
                }
            };
            let f = num(0, "freq_hz")?;
            let z = Complex::new(num(1, "re")?, num(2, "im")?);
            let path: Path = record[3]
                .parse()
                .map_err(|message| Error::Parse { line, message })?;
            match &label {
                None => label = Some(record[4].to_string()),
                Some(l) if l != &record[4] => {
                    return Err(Error::Parse {
                        line,
                        message: "label differs from earlier rows".into(),
                    })
                }
                _ => {}
            }
            let col = columns.entry(path).or_default();
            if let Some(&prev) = col.0.last() {
                if f <= prev {
                    return Err(Error::Parse {
                        line,
                        message: "frequencies must be strictly increasing within a path".into(),
                    });
                }
            }
            col.0.push(f);
            col.1.push(z);
        }
        let mut iter = columns.into_iter();
        let (first_path, (freqs, first_values)) = iter.next().ok_or(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        })?;
        let mut trace = SpectrumTrace::new(freqs, label.unwrap_or_default());
        trace.paths.insert(first_path, first_values);
        for (path, (f, values)) in iter {
            if f != trace.freqs {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("path {path} uses a different frequency grid"),
                });
            }
            trace.paths.insert(path, values);
        }
        trace.validate()?;
        Ok(trace)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let trace: SpectrumTrace = serde_json::from_reader(input)?;
        trace.validate()?;
        Ok(trace)
    }

    /// Reads a trace from disk, choosing the format by extension.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::read_json(file),
            _ => Self::read_csv(file),
        }
    }
}

/// 17 significant digits, enough for an exact `f64` round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn csv_parse(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
