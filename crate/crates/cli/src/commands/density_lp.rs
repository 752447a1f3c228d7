use fnls::dynamics::Propagator;
use fnls::lemma_lab::numerology;
use fnls::measures::{rho_weight, GaussianSampler};
use fnls::spectral_core::hs_norm_sq;
use fnls::{Field64, GridSpec};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{num, CsvOut};
use crate::stats::{fit_line, log_lp_norm};
use crate::{formats, CliError, Report};

/// Per-sample `(log w, [log f_t for each t])` at truncation `n`.
fn transport(cfg: &ExperimentConfig, n: usize) -> Result<Vec<(f64, Vec<f64>)>, CliError> {
    let p = cfg.model;
    let g = GridSpec::for_trunc(n);
    let ts = &cfg.density_lp.t_values;
    let sampler = GaussianSampler::new(p.s, n, cfg.seed);
    let rows: Vec<Result<(f64, Vec<f64>), CliError>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map_init(
            || Propagator::<f64>::new(p, g, cfg.integrator).expect("validated config"),
            |prop, i| {
                let u: Field64 = sampler.sample(i);
                let e0 = hs_norm_sq(&u, p.s);
                let mut logs = Vec::with_capacity(ts.len());
                for &t in ts {
                    let back = prop.flow_final(&u, -t).map_err(|e| CliError::Runtime(format!("N = {n}, sample {i}: {e}")))?;
                    logs.push(e0 - hs_norm_sq(&back, p.s));
                }
                Ok((rho_weight(&u, &p, n).ln(), logs))
            },
        )
        .collect();
    rows.into_iter().collect()
}

/// Empirical `log ‖f_t^N‖_{L^p(ρ)}` over the configured `N`, `t` and `p`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let d = &cfg.density_lp;
    let mut table = Vec::new();
    for &n in &d.n_values {
        let rows = transport(cfg, n)?;
        let lw: Vec<f64> = rows.iter().map(|r| r.0).collect();
        for (k, &t) in d.t_values.iter().enumerate() {
            let lf: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
            for &p in &d.p_values {
                let (v, se) = log_lp_norm(&lw, &lf, p);
                table.push((n, t, p, v, se));
            }
        }
    }

    let mut out = CsvOut::create(cfg, "density_lp.csv", &formats::DENSITY_LP)?;
    let mut worst_z = 0.0f64;
    for (i, &(n, t, p, v, se)) in table.iter().enumerate() {
        let prev = table[..i].iter().rev().find(|r| r.1 == t && r.2 == p && r.0 < n);
        let z = prev.map(|r| {
            let s = (se * se + r.4 * r.4).sqrt();
            if s == 0.0 { if v == r.3 { 0.0 } else { f64::INFINITY } } else { (v - r.3) / s }
        });
        if let Some(z) = z {
            worst_z = worst_z.max(z.abs());
        }
        let plateau = z.map(|z| z.abs() <= d.plateau_z);
        out.row(&[
            n.to_string(),
            num(t),
            num(p),
            num(v),
            num(se),
            cfg.samples.to_string(),
            z.map(num).unwrap_or_default(),
            plateau.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    let file = out.finish()?;

    let growth_a = numerology(cfg.model.alpha, cfg.model.s, cfg.model.gamma).ok().and_then(|r| r.growth_a);
    let mut fit_out = CsvOut::create(cfg, "density_lp_fit.csv", &formats::DENSITY_LP_FIT)?;
    let mut fits = Vec::new();
    for &n in &d.n_values {
        for &p in &d.p_values {
            // log log ‖f‖ against log ⟨t⟩ over the times where the norm is positive
            let pts: Vec<(f64, f64)> = table
                .iter()
                .filter(|r| r.0 == n && r.2 == p && r.1 > 0.0 && r.3 > 0.0)
                .map(|r| ((1.0 + r.1 * r.1).sqrt().ln(), r.3.ln()))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let fit = fit_line(&x, &y);
            let below = match (fit, growth_a) {
                (Some(f), Some(a)) => Some(f.slope <= a + 2.0 * f.slope_stderr.max(0.0)),
                _ => None,
            };
            fit_out.row(&[
                n.to_string(),
                num(p),
                fit.map(|f| num(f.slope)).unwrap_or_default(),
                fit.map(|f| num(f.slope_stderr)).unwrap_or_default(),
                fit.map(|f| f.points).unwrap_or(0).to_string(),
                growth_a.map(num).unwrap_or_default(),
                below.map(|b| b.to_string()).unwrap_or_default(),
            ])?;
            fits.push(json!({ "n_trunc": n, "p": p, "fit": fit }));
        }
    }
    let fit_file = fit_out.finish()?;
    let plateau = worst_z <= d.plateau_z;
    Ok(Report {
        pass: plateau || !d.gate_plateau,
        files: vec![file, fit_file],
        summary: json!({
            "plateau": plateau,
            "max_abs_z_across_n": worst_z,
            "growth_a": growth_a,
            "fits": fits,
        }),
    })
}
