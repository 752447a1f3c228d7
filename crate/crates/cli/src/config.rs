//! Experiment configuration: one JSON document, merged over the defaults and
//! then patched with dotted-path overrides such as `--model.alpha=1.5`.

use std::path::{Path, PathBuf};

use fnls::dynamics::{IntegratorConfig, Method};
use fnls::xnorm::TauConfig;
use fnls::{GridSpec, ModelParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub grid: GridConfig,
    pub integrator: IntegratorConfig,
    pub tau: TauConfig,
    pub seed: u64,
    pub samples: usize,
    pub t_final: f64,
    pub output_dir: PathBuf,
    pub simulate: SimulateConfig,
    pub quasi: QuasiConfig,
    pub density_lp: DensityLpConfig,
    pub tau_tail: TauTailConfig,
    pub lemma: LemmaConfig,
}

/// Truncation and padded grid size; `n_pad` is filled in on load when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_trunc: usize,
    #[serde(default)]
    pub n_pad: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    /// Draw `sample_index` of the Gaussian measure.
    Sample,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub initial: InitialData,
    pub sample_index: u64,
    /// Regularity of the `h_sigma_norm` column.
    pub sigma: f64,
    /// Gate on the relative mass drift.
    pub mass_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiConfig {
    pub gate_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityLpConfig {
    pub p_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub t_values: Vec<f64>,
    /// Largest `|z|` between consecutive truncations still counted as a plateau.
    pub plateau_z: f64,
    /// Turns a non-plateau into a gate failure.
    pub gate_plateau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauTailConfig {
    pub final_bin_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    /// Overrides `model.alpha` (the scans also accept `α ≤ 1`).
    pub alpha: Option<f64>,
    /// Overrides `model.s`.
    pub s: Option<f64>,
    pub n_max: i64,
    pub phase_stability: f64,
    pub psi_stability: f64,
    pub qdiv_s: f64,
    pub qdiv_n: Vec<usize>,
    pub flip_alphas: Vec<f64>,
    pub flip_delta: f64,
    pub x3_tol: f64,
    pub gauge_tol: f64,
    pub density_tol: f64,
    pub density_ratio: f64,
    pub draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::new(2.0, 0.45, 3.0, 1).expect("valid defaults"),
            grid: GridConfig { n_trunc: 16, n_pad: None },
            integrator: IntegratorConfig { method: Method::Gauss4, ..IntegratorConfig::default() },
            tau: TauConfig::default(),
            seed: 0,
            samples: 1000,
            t_final: 0.5,
            output_dir: PathBuf::from("out"),
            simulate: SimulateConfig { initial: InitialData::Sample, sample_index: 0, sigma: -0.1, mass_tol: 1e-8 },
            quasi: QuasiConfig { gate_z: 4.0 },
            density_lp: DensityLpConfig {
                p_values: vec![2.0, 4.0],
                n_values: vec![4, 8, 16],
                t_values: vec![0.0, 0.25, 0.5, 1.0],
                plateau_z: 3.0,
                gate_plateau: false,
            },
            tau_tail: TauTailConfig { final_bin_max: 1e-2 },
            lemma: LemmaConfig {
                alpha: None,
                s: None,
                n_max: 64,
                phase_stability: 0.2,
                psi_stability: 0.1,
                qdiv_s: 0.5,
                qdiv_n: vec![8, 16, 32, 64, 128],
                flip_alphas: vec![1.1, 1.3, 1.6, 2.0, 3.0],
                flip_delta: 1e-6,
                x3_tol: 1e-4,
                gauge_tol: 1e-5,
                density_tol: 1e-5,
                density_ratio: 3.5,
                draws: 100,
            },
        }
    }
}

impl ExperimentConfig {
    /// Defaults, then the file (if any), then `overrides` (`key.path=value`).
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut doc = serde_json::to_value(Self::default()).expect("defaults serialize");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let patch: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            merge(&mut doc, patch);
        }
        for (key, raw) in overrides {
            set_path(&mut doc, key, parse_scalar(raw))?;
        }
        Self::from_value(doc)
    }

    pub fn from_value(doc: Value) -> Result<Self, CliError> {
        let mut cfg: Self = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self) {
        if self.grid.n_pad.is_none() {
            self.grid.n_pad = Some(GridSpec::for_trunc(self.grid.n_trunc).n_pad);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.grid_spec()?;
        self.integrator.validate()?;
        self.tau.validate(&self.model)?;
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.grid.n_trunc == 0 {
            return bad("grid.n_trunc must be positive");
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be finite and non-negative");
        }
        if self.samples < 2 {
            return bad("samples must be at least 2");
        }
        let d = &self.density_lp;
        if d.p_values.is_empty() || d.n_values.is_empty() || d.t_values.is_empty() {
            return bad("density_lp lists must be non-empty");
        }
        if d.p_values.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return bad("density_lp.p_values must be finite and at least 1");
        }
        if d.n_values.iter().any(|&n| n == 0) || d.t_values.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return bad("density_lp.n_values must be positive and t_values non-negative");
        }
        let l = &self.lemma;
        if l.n_max < 1 || l.draws < 1 || l.qdiv_n.len() < 2 {
            return bad("lemma.n_max and lemma.draws must be positive and lemma.qdiv_n needs two entries");
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let pad = self.grid.n_pad.unwrap_or_else(|| GridSpec::for_trunc(self.grid.n_trunc).n_pad);
        Ok(GridSpec::new(self.grid.n_trunc, pad)?)
    }

    /// Single-line JSON used as the first line of every CSV.
    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Command-line flags that are not configuration keys.
const FLAGS: [&str; 6] = ["config", "seed", "out", "threads", "help", "version"];

/// Splits `--key.path=value` arguments from the rest. Any `--key=value` whose
/// key is not one of the command-line flags is an override.
pub fn split_overrides(args: impl IntoIterator<Item = String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut over = Vec::new();
    for a in args {
        match a.strip_prefix("--").and_then(|body| body.split_once('=')) {
            Some((k, v)) if !FLAGS.contains(&k) => over.push((k.to_string(), v.to_string())),
            _ => rest.push(a),
        }
    }
    (rest, over)
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(doc: &mut Value, key: &str, v: Value) -> Result<(), CliError> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("malformed override key `{key}`")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{}` is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let cfg = ExperimentConfig::load(None, &[("model.alpha".into(), "1.3".into()), ("t_final".into(), "0.1".into())]).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_compact_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.model.alpha, 1.3);
        assert_eq!(cfg.grid.n_pad, Some(128));
    }

    #[test]
    fn overrides_and_errors() {
        let args = ["quasi", "--seed", "3", "--model.s=0.4", "--samples=5", "--out=x"].map(String::from);
        let (rest, over) = split_overrides(args);
        assert_eq!(rest, vec!["quasi", "--seed", "3", "--out=x"]);
        assert_eq!(over, vec![("model.s".to_string(), "0.4".to_string()), ("samples".to_string(), "5".to_string())]);
        assert!(matches!(ExperimentConfig::load(None, &[("model.typo".into(), "1".into())]), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::load(None, &[("model.alpha".into(), "0.9".into())]), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::load(None, &[("grid.n_pad".into(), "8".into())]), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::load(None, &[("seed.x".into(), "8".into())]), Err(CliError::Config(_))));
        let c = ExperimentConfig::load(None, &[("integrator.method".into(), "ifrk4".into())]).unwrap();
        assert_eq!(c.integrator.method, Method::Ifrk4);
    }
}
