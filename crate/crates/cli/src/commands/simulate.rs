use fnls::density::q_functional;
use fnls::dynamics::flow;
use fnls::measures::{wick_mass, GaussianSampler};
use fnls::spectral_core::{hs_norm_sq, mass};
use fnls::Field64;
use serde_json::json;

use crate::config::{ExperimentConfig, InitialData};
use crate::output::{num, CsvOut};
use crate::{formats, CliError, Report};

pub fn initial_datum(cfg: &ExperimentConfig) -> Field64 {
    let n = cfg.grid.n_trunc;
    match cfg.simulate.initial {
        InitialData::Zero => Field64::zeros(n),
        InitialData::Sample => GaussianSampler::new(cfg.model.s, n, cfg.seed).sample(cfg.simulate.sample_index),
    }
}

/// One trajectory on `[0, t_final]`; gates on the relative mass drift.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let g = cfg.grid_spec()?;
    let (n, s) = (g.n_trunc, cfg.model.s);
    let u0 = initial_datum(cfg);
    let traj = flow(&u0, cfg.t_final, &cfg.model, &g, &cfg.integrator).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = CsvOut::create(cfg, "simulate.csv", &formats::SIMULATE)?;
    let m0 = mass(&u0);
    let w0 = wick_mass(&u0, s, n);
    let (mut mass_drift, mut wick_drift) = (0.0f64, 0.0f64);
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let (m, w) = (mass(u), wick_mass(u, s, n));
        mass_drift = mass_drift.max((m - m0).abs());
        wick_drift = wick_drift.max((w - w0).abs());
        let q = q_functional(u, u, u, u, s);
        out.row(&[num(*t), num(m), num(w), num(hs_norm_sq(u, s)), num(hs_norm_sq(u, cfg.simulate.sigma).sqrt()), num(q)])?;
    }
    let file = out.finish()?;
    let scale = if m0 > 0.0 { m0 } else { 1.0 };
    let (rel_mass, rel_wick) = (mass_drift / scale, wick_drift / scale);
    Ok(Report {
        pass: rel_mass <= cfg.simulate.mass_tol,
        files: vec![file],
        summary: json!({
            "rows": traj.len(),
            "initial_mass": m0,
            "max_relative_mass_drift": rel_mass,
            "max_relative_wick_mass_drift": rel_wick,
        }),
    })
}
