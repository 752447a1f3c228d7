use fnls::density::{DensityEvaluator, MAX_EXPONENT};
use fnls::measures::{rho_weight, GaussianSampler, McEstimate};
use fnls::spectral_core::hs_norm_sq;
use fnls::Field64;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{num, CsvOut};
use crate::stats::{ratio, z_score};
use crate::{formats, CliError, Report};

type Functional = fn(&Field64) -> f64;

/// Bounded test functionals (`re_c0` excepted), in CSV row order.
pub const FUNCTIONALS: [(&str, Functional); 4] = [
    ("re_c0", |u| u.get(0).re),
    ("low_mass", |u| (u.get(0).norm_sqr() + u.get(1).norm_sqr() + u.get(-1).norm_sqr()).tanh()),
    ("neg_sobolev", |u| (-hs_norm_sq(u, -0.1)).exp()),
    ("phase", |u| (3.0 * (u.get(0) * u.get(0) * (u.get(1) * u.get(-1)).conj()).im).tanh()),
];

struct Sample {
    weight: f64,
    log_f: f64,
    start: Vec<f64>,
    end: Vec<f64>,
}

fn eval(u: &Field64) -> Vec<f64> {
    FUNCTIONALS.iter().map(|(_, f)| f(u)).collect()
}

/// Compares `E_ρ[F(Φ_t u)]` with `E_ρ[F(u) f_t(u)]` on paired samples.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.samples < 1000 {
        return Err(CliError::Config(format!("quasi needs at least 1000 samples, got {}", cfg.samples)));
    }
    let g = cfg.grid_spec()?;
    let (p, t, n) = (cfg.model, cfg.t_final, g.n_trunc);
    DensityEvaluator::<f64>::new(p, g, cfg.integrator)?;
    let sampler = GaussianSampler::new(p.s, n, cfg.seed);
    let rows: Vec<Result<Sample, CliError>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map_init(
            || DensityEvaluator::<f64>::new(p, g, cfg.integrator).expect("validated above"),
            |ev, i| {
                let u: Field64 = sampler.sample(i);
                let back = ev.backward(&u, t).map_err(|e| CliError::Runtime(format!("sample {i}: {e}")))?;
                let fwd = ev.propagator().flow_final(&u, t).map_err(|e| CliError::Runtime(format!("sample {i}: {e}")))?;
                Ok(Sample { weight: rho_weight(&u, &p, n), log_f: back.log_f_closed, start: eval(&u), end: eval(&fwd) })
            },
        )
        .collect();
    let rows: Vec<Sample> = rows.into_iter().collect::<Result<_, _>>()?;

    let mut overflow = CsvOut::create(cfg, "quasi_overflow.csv", &formats::QUASI_OVERFLOW)?;
    let mut kept = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.log_f > MAX_EXPONENT || !r.log_f.is_finite() {
            overflow.row(&[i.to_string(), num(r.log_f)])?;
        } else {
            kept.push(r);
        }
    }
    let overflowed = rows.len() - kept.len();
    let overflow_file = overflow.finish()?;

    let w: Vec<f64> = kept.iter().map(|r| r.weight).collect();
    let dens: Vec<f64> = kept.iter().map(|r| r.log_f.exp()).collect();
    let mut out = CsvOut::create(cfg, "quasi.csv", &formats::QUASI)?;
    let mut zs = Vec::new();
    for (k, (name, _)) in FUNCTIONALS.iter().enumerate() {
        let a: Vec<f64> = kept.iter().map(|r| r.end[k]).collect();
        let b: Vec<f64> = kept.iter().zip(&dens).map(|(r, f)| r.start[k] * f).collect();
        let (ma, sa) = ratio(&w, &a);
        let (mb, sb) = ratio(&w, &b);
        let pairs: Vec<(f64, f64)> = w.iter().zip(a.iter().zip(&b)).map(|(&wi, (x, y))| (wi, x - y)).collect();
        let d = McEstimate::from_pairs(&pairs)?;
        let z = z_score(d.mean, d.stderr);
        zs.push((name.to_string(), z));
        out.row(&[
            name.to_string(),
            num(t),
            kept.len().to_string(),
            overflowed.to_string(),
            num(ma),
            num(sa),
            num(mb),
            num(sb),
            num(z),
        ])?;
    }
    let file = out.finish()?;
    let max_abs_z = zs.iter().fold(0.0f64, |m, (_, z)| m.max(z.abs()));
    Ok(Report {
        pass: max_abs_z <= cfg.quasi.gate_z,
        files: vec![file, overflow_file],
        summary: json!({
            "z_paired": zs.iter().map(|(n, z)| json!({ "functional": n, "z": z })).collect::<Vec<_>>(),
            "max_abs_z": max_abs_z,
            "overflowed": overflowed,
            "samples": kept.len(),
        }),
    })
}
