use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::Experiment;
use crate::estimators::SpectrumGrid;
use crate::Result;

pub const GENERATOR: &str = concat!("sfas-core ", env!("CARGO_PKG_VERSION"));

/// Comment lines (without the leading `# `) identifying the code version and
/// resolved configuration that produced a file.
pub fn provenance_lines(experiment: &Experiment) -> Result<Vec<String>> {
    let mut lines = vec![format!("generator: {GENERATOR}")];
    lines.extend(experiment.to_toml()?.lines().map(|l| format!("config: {l}")));
    Ok(lines)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// CSV preceded by `#` comment lines.
pub fn write_csv<F>(path: &Path, comments: &[String], header: &[&str], body: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<&mut BufWriter<File>>) -> Result<()>,
{
    let mut out = create(path)?;
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        writer.write_record(header)?;
        body(&mut writer)?;
        writer.flush()?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_spectrum(path: &Path, comments: &[String], spectrum: &SpectrumGrid) -> Result<()> {
    let mut out = create(path)?;
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    spectrum.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Shortest round-trip decimal form; `inf`/`-inf`/`NaN` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Run manifest written next to every set of outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub generator: String,
    pub command: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    /// Resolved configuration in experiment-file syntax.
    pub config_toml: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, experiment: &Experiment) -> Result<Self> {
        Ok(Self {
            generator: GENERATOR.into(),
            command: command.into(),
            seed: experiment.seed,
            files: Vec::new(),
            notes: Vec::new(),
            config_toml: experiment.to_toml()?,
            summary: None,
        })
    }
}
