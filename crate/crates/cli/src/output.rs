use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::CliError;

/// CSV file whose first line is `# config=<compact JSON>`, followed by the header.
pub struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(cfg: &ExperimentConfig, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path = cfg.output_dir.join(name);
        let mut f = BufWriter::new(File::create(&path)?);
        writeln!(f, "# config={}", cfg.to_compact_json())?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        Ok(Self { path, w })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.w.flush()?;
        Ok(self.path)
    }
}

/// Shortest round-trip decimal, `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// JSON report `{ "config": …, "report": … }` in the output directory.
pub fn write_report(cfg: &ExperimentConfig, name: &str, report: &impl Serialize) -> Result<PathBuf, CliError> {
    let path = cfg.output_dir.join(name);
    write_json(&path, &json!({ "config": cfg, "report": report }))?;
    Ok(path)
}

/// `git describe --always --dirty` of the working directory, or `"unknown"`.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}
