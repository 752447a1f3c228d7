use fnls::lemma_lab::numerology;
use fnls::measures::{rho_weight, GaussianSampler};
use fnls::xnorm::{stopping_time_tau, TauOutcome};
use fnls::Field64;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{num, CsvOut};
use crate::stats::{fit_line, ratio};
use crate::{formats, CliError, Report};

/// Weighted survival `P_ρ(τ^{-1} > λ_j)` at the dyadic levels `λ_j = 1/T_{2^j}`.
///
/// A sample that passes no level up to the cap counts as surviving every bin.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.samples < 1000 {
        return Err(CliError::Config(format!("tau-tail needs at least 1000 samples, got {}", cfg.samples)));
    }
    let g = cfg.grid_spec()?;
    let p = cfg.model;
    let sampler = GaussianSampler::new(p.s, g.n_trunc, cfg.seed);
    let rows: Vec<Result<(f64, TauOutcome), CliError>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let u: Field64 = sampler.sample(i);
            let o = stopping_time_tau(&u, &p, &g, &cfg.integrator, &cfg.tau)
                .map_err(|e| CliError::Runtime(format!("sample {i}: {e}")))?;
            Ok((rho_weight(&u, &p, g.n_trunc), o))
        })
        .collect();
    let rows: Vec<(f64, TauOutcome)> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut per = CsvOut::create(cfg, "tau_samples.csv", &formats::TAU_SAMPLES)?;
    for (i, (w, o)) in rows.iter().enumerate() {
        per.row(&[i.to_string(), num(*w), num(o.tau), num(o.m), o.passed.to_string(), num(o.norm_l2), num(o.norm_hs)])?;
    }
    let per_file = per.finish()?;

    let w: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut out = CsvOut::create(cfg, "tau_tail.csv", &formats::TAU_TAIL)?;
    let mut surv = Vec::new();
    for j in 0..=cfg.tau.m_cap {
        let m = 2f64.powi(j as i32);
        let lambda = 1.0 / cfg.tau.time_for(m, p.alpha);
        let ind: Vec<f64> = rows.iter().map(|(_, o)| if !o.passed || o.m > m { 1.0 } else { 0.0 }).collect();
        let (s, se) = ratio(&w, &ind);
        out.row(&[j.to_string(), num(m), num(lambda), num(s), num(se)])?;
        surv.push((lambda, s));
    }
    let file = out.finish()?;

    let monotone = surv.windows(2).all(|x| x[1].1 <= x[0].1);
    let final_bin = surv.last().map(|x| x.1).unwrap_or(0.0);
    let beta = numerology(p.alpha, p.s, p.gamma).map(|r| r.beta).ok();
    // log-survival against λ^β over the bins with positive mass
    let fit = beta.and_then(|b| {
        let (x, y): (Vec<f64>, Vec<f64>) = surv.iter().filter(|x| x.1 > 0.0).map(|&(l, s)| (l.powf(b), s.ln())).unzip();
        fit_line(&x, &y)
    });
    let unpassed = rows.iter().filter(|r| !r.1.passed).count();
    Ok(Report {
        pass: monotone && final_bin <= cfg.tau_tail.final_bin_max,
        files: vec![file, per_file],
        summary: json!({
            "monotone": monotone,
            "final_bin": final_bin,
            "unpassed_samples": unpassed,
            "beta": beta,
            "tail_fit": fit,
            "tail_slope_negative": fit.map(|f| f.slope < 0.0),
        }),
    })
}
