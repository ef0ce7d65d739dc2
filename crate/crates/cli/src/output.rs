//! File emission helpers. Every writer produces the same bytes for the same
//! input.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mzq_core::trace::fmt_f64;
use mzq_core::SpectrumTrace;
use serde::Serialize;

use crate::failure::{CliResult, Failure};

/// Output directory plus verbosity.
pub struct Ctx {
    pub out: PathBuf,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Ctx {
    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_trace(dir: &Path, stem: &str, trace: &SpectrumTrace) -> CliResult<()> {
    let mut w = create(&dir.join(format!("{stem}.csv")))?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(format!("{stem}.json")))?;
    trace.write_json(&mut w)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Numeric table with the given header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect()
}
