use std::path::PathBuf;

use mzq_core::estimate::classify_regime;
use mzq_core::SpectrumTrace;
use serde::Serialize;

use crate::config::{read_json, resolve, ClassifyConfig};
use crate::failure::{CliResult, Failure};
use crate::output::{write_json, Ctx};

#[derive(Serialize)]
struct Label {
    file: PathBuf,
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn classify(ctx: &Ctx) -> CliResult<()> {
    let cfg: ClassifyConfig = read_json(&ctx.config)?;
    cfg.validate()?;
    let mut labels = Vec::new();
    let mut failures = Vec::new();
    for file in &cfg.traces {
        let path = resolve(&ctx.config, file);
        let outcome = SpectrumTrace::load(&path).and_then(|t| classify_regime(&t));
        match outcome {
            Ok(l) => {
                ctx.note(format!("{}: {l}", file.display()));
                labels.push(Label {
                    file: file.clone(),
                    label: Some(l.to_string()),
                    error: None,
                });
            }
            Err(e) => {
                labels.push(Label {
                    file: file.clone(),
                    label: None,
                    error: Some(e.to_string()),
                });
                failures.push(Failure::from(e).context(file.display()));
            }
        }
    }
    write_json(&ctx.path("classify.json"), &labels)?;
    match Failure::combine(failures) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
