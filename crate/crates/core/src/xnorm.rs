//! Discrete surrogates for the Fourier restriction norms `X^{s,b}_{p,q}` and
//! the stopping time `τ_N`.
//!
//! The space-time transform is evaluated in the modulation variable
//! `λ = τ − |n|^{2α}`: each mode is demodulated by `e^{−it|n|^{2α}}` before
//! the time transform, so `ĥ(n, |n|^{2α} + λ)` is sampled on a grid in `λ`
//! that is the same for every `n`. This is an exact change of variables and
//! keeps the transform free of aliasing however large `|n|^{2α}` is.
//!
//! Time transform convention: `ĥ(τ) = (2π)^{−1/2} ∫ e^{−itτ} h(t) dt`, so
//! `Σ_k |ĥ(λ_k)|² Δλ = Δt Σ_j |h(t_j)|²` exactly.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, Propagator, Trajectory};
use crate::error::{FnlsError, Result};
use crate::scalar::{to64, Scalar};
use crate::spectral_core::{disp, jb, FourierField, GridSpec, ModelParams};

/// Zero-padding factor of the time transform.
pub const PAD_FACTOR: usize = 8;

/// Smooth cutoff: `η = 1` on `[−1, 1]`, `η = 0` outside `(−2, 2)`, built from `e^{−1/x}`.
pub fn eta(x: f64) -> f64 {
    let f = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let a = x.abs();
    let (p, q) = (f(2.0 - a), f(a - 1.0));
    p / (p + q)
}

/// Time cutoff applied before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "t")]
pub enum Window {
    /// `η(t/T)`, supported in `[−2T, 2T]`.
    Smooth(f64),
    /// Indicator of `[−T, T]`.
    Sharp(f64),
}

impl Window {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Window::Smooth(tt) => eta(t / tt),
            Window::Sharp(tt) => {
                if t.abs() <= tt * (1.0 + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed support `[−a, a]`.
    pub fn support(&self) -> f64 {
        match *self {
            Window::Smooth(tt) => 2.0 * tt,
            Window::Sharp(tt) => tt,
        }
    }
}

/// `ĥ(n, |n|^{2α} + λ_k)` for `|n| ≤ N` and `λ_k = k Δλ`, `k ∈ [k_min, k_min + K)`.
#[derive(Debug, Clone)]
pub struct SpaceTimeCoefficients {
    pub n_trunc: usize,
    pub alpha: f64,
    pub d_lambda: f64,
    pub k_min: i64,
    /// Row `j` holds mode `n = j − N`.
    pub coeffs: Vec<Vec<Complex<f64>>>,
    pub window: Window,
}

impl SpaceTimeCoefficients {
    pub fn lambda(&self, k: usize) -> f64 {
        (self.k_min + k as i64) as f64 * self.d_lambda
    }

    /// Temporal frequency `τ = |n|^{2α} + λ_k`.
    pub fn tau(&self, n: i64, k: usize) -> f64 {
        disp(n, self.alpha) + self.lambda(k)
    }

    /// Largest represented `|λ|`.
    pub fn lambda_max(&self) -> f64 {
        self.k_min.unsigned_abs() as f64 * self.d_lambda
    }
}

/// Windows the trajectory and transforms each mode in time.
pub fn space_time_transform<T: Scalar>(traj: &Trajectory<T>, window: Window, alpha: f64) -> Result<SpaceTimeCoefficients> {
    let n = traj.grid.n_trunc as i64;
    let zero_coeffs = |k: usize| SpaceTimeCoefficients {
        n_trunc: n as usize,
        alpha,
        d_lambda: 1.0,
        k_min: -(k as i64) / 2,
        coeffs: vec![vec![Complex::new(0.0, 0.0); k]; (2 * n + 1) as usize],
        window,
    };
    let h = traj.spacing().ok_or(FnlsError::NonUniformGrid)?;
    let a = window.support();
    // The cutoff may start between two samples; one step of slack is allowed.
    if traj.t_min() > -a + h * (1.0 + 1e-9) || traj.t_max() < a - h * (1.0 + 1e-9) {
        return Err(FnlsError::Coverage { need_lo: -a, need_hi: a, have_lo: traj.t_min(), have_hi: traj.t_max() });
    }
    let sub = traj.window(-a, a);
    let l = sub.len();
    let k = (PAD_FACTOR * l).next_power_of_two();
    if sub.states.iter().all(|s| s.coeffs().iter().all(|c| c.norm_sqr() == T::zero())) {
        let mut z = zero_coeffs(k);
        z.d_lambda = 2.0 * std::f64::consts::PI / (k as f64 * h);
        return Ok(z);
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(k);
    let t0 = sub.t_min();
    let d_lambda = 2.0 * std::f64::consts::PI / (k as f64 * h);
    let k_min = -(k as i64) / 2;
    let norm = h / (2.0 * std::f64::consts::PI).sqrt();
    let weights: Vec<f64> = sub.times.iter().map(|&t| window.value(t)).collect();
    let mut rows = Vec::with_capacity((2 * n + 1) as usize);
    let mut buf = vec![Complex::new(0.0, 0.0); k];
    for m in -n..=n {
        let om = disp(m, alpha);
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (j, (state, (&t, &w))) in sub.states.iter().zip(sub.times.iter().zip(&weights)).enumerate() {
            let c = state.get(m);
            buf[j] = Complex::new(to64(c.re), to64(c.im)) * Complex::from_polar(w, -t * om);
        }
        fft.process(&mut buf);
        let row: Vec<Complex<f64>> = (0..k)
            .map(|i| {
                let kk = k_min + i as i64;
                let lam = kk as f64 * d_lambda;
                buf[kk.rem_euclid(k as i64) as usize] * Complex::from_polar(norm, -lam * t0)
            })
            .collect();
        rows.push(row);
    }
    Ok(SpaceTimeCoefficients { n_trunc: n as usize, alpha, d_lambda, k_min, coeffs: rows, window })
}

fn lp(values: impl Iterator<Item = f64>, p: f64, measure: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        (values.map(|x| x.powf(p)).sum::<f64>() * measure).powf(1.0 / p)
    }
}

/// `‖ ⟨n⟩^s ‖⟨τ − |n|^{2α}⟩^b ĥ(n, τ)‖_{L^q_τ} ‖_{ℓ^p_n}` by Riemann sums in `τ`.
pub fn xsb_norm(c: &SpaceTimeCoefficients, s: f64, b: f64, p: f64, q: f64) -> f64 {
    assert!(p >= 1.0 && q >= 1.0, "p and q must be at least 1");
    let n = c.n_trunc as i64;
    let inner: Vec<f64> = c
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let weighted = row.iter().enumerate().map(|(k, z)| jb_real(c.lambda(k)).powf(b) * z.norm());
            jb((j as i64) - n).powf(s) * lp(weighted, q, c.d_lambda)
        })
        .collect();
    lp(inner.into_iter(), p, 1.0)
}

fn jb_real(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Upper-bound surrogate for the local norm `‖u‖_{X^{s,b}_{2,q}(T)}`: the
/// trajectory itself, cut off by `η_T`, serves as the extension.
///
/// The trajectory must cover `[−2T, 2T]`.
pub fn localized_xsb_norm<T: Scalar>(traj: &Trajectory<T>, t: f64, s: f64, b: f64, q: f64, alpha: f64) -> Result<f64> {
    let c = space_time_transform(traj, Window::Smooth(t), alpha)?;
    Ok(xsb_norm(&c, s, b, 2.0, q))
}

/// Constants of the stopping-time test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauConfig {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_eps")]
    pub eps_dyadic: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "one")]
    pub c1: f64,
    /// `b = 1/q' + b_slack`.
    #[serde(default = "default_eps")]
    pub b_slack: f64,
    /// Largest dyadic exponent scanned: `M ≤ 2^{m_cap}`.
    #[serde(default = "default_m_cap")]
    pub m_cap: u32,
    /// Fewest time steps per `T_M` before the remainder is recomputed with a finer step.
    #[serde(default = "default_min_steps")]
    pub min_steps_per_window: usize,
}

fn default_q() -> f64 {
    2.0
}
fn default_eps() -> f64 {
    0.01
}
fn one() -> f64 {
    1.0
}
fn default_m_cap() -> u32 {
    12
}
fn default_min_steps() -> usize {
    32
}

impl Default for TauConfig {
    fn default() -> Self {
        Self {
            q: default_q(),
            eps_dyadic: default_eps(),
            c0: 1.0,
            c1: 1.0,
            b_slack: default_eps(),
            m_cap: default_m_cap(),
            min_steps_per_window: default_min_steps(),
        }
    }
}

impl TauConfig {
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let qmax = 4.0 * params.alpha / (3.0 - 2.0 * params.s);
        if !(self.q >= 2.0 && self.q < qmax) {
            return Err(FnlsError::Config(format!("q = {} must lie in [2, {qmax})", self.q)));
        }
        if !(self.eps_dyadic > 0.0) || !(self.c0 > 0.0) || !(self.c1 > 0.0) || !(self.b_slack > 0.0) {
            return Err(FnlsError::Config("eps_dyadic, c0, c1 and b_slack must be positive".into()));
        }
        if self.min_steps_per_window < 4 {
            return Err(FnlsError::Config("min_steps_per_window must be at least 4".into()));
        }
        Ok(())
    }

    /// Modulation exponent `b = 1/q' + slack`.
    pub fn b(&self) -> f64 {
        1.0 - 1.0 / self.q + self.b_slack
    }

    /// `T_M = M^{−(4α/(2α−1) + ε)}`.
    pub fn time_for(&self, m: f64, alpha: f64) -> f64 {
        m.powf(-(4.0 * alpha / (2.0 * alpha - 1.0) + self.eps_dyadic))
    }
}

/// Result of the dyadic scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauOutcome {
    pub tau: f64,
    /// Dyadic level reported (smallest passing `M`, or the cap).
    pub m: f64,
    /// False when no level up to the cap passed.
    pub passed: bool,
    pub norm_l2: f64,
    pub norm_hs: f64,
}

/// Stopping time `τ_N(u0)`: `T_M` at the smallest dyadic `M = 1, 2, 4, …` for which
/// the remainder `V_N(u0)` satisfies
/// `‖V‖_{X^{0,b}_q(T_M)} ≤ c0·M` and `‖V‖_{X^{s,b}_q(T_M)} ≤ c1·M^γ`.
///
/// Levels that fail are skipped; if none passes up to `2^{m_cap}`, the time at
/// the cap is returned with `passed = false`.
pub fn stopping_time_tau<T: Scalar>(
    u0: &FourierField<T>,
    params: &ModelParams,
    grid: &GridSpec,
    integ: &IntegratorConfig,
    cfg: &TauConfig,
) -> Result<TauOutcome> {
    cfg.validate(params)?;
    let b = cfg.b();
    let alpha = params.alpha;
    let mut base_cfg = *integ;
    base_cfg.record_every = 1;
    let mut prop = Propagator::<T>::new(*params, *grid, base_cfg)?;
    let span1 = 2.0 * cfg.time_for(1.0, alpha);
    let full = prop.remainder_two_sided(u0, span1, span1)?;
    let mut last = None;
    for e in 0..=cfg.m_cap {
        let m = 2f64.powi(e as i32);
        let t = cfg.time_for(m, alpha);
        let traj = if t / integ.dt >= cfg.min_steps_per_window as f64 {
            full.window(-2.0 * t, 2.0 * t)
        } else {
            let fine = IntegratorConfig { dt: t / cfg.min_steps_per_window as f64, ..base_cfg };
            let mut p = Propagator::<T>::new(*params, *grid, fine)?;
            p.remainder_two_sided(u0, 2.0 * t, 2.0 * t)?
        };
        let n0 = localized_xsb_norm(&traj, t, 0.0, b, cfg.q, alpha)?;
        let ns = localized_xsb_norm(&traj, t, params.s, b, cfg.q, alpha)?;
        let outcome = TauOutcome { tau: t, m, passed: true, norm_l2: n0, norm_hs: ns };
        if n0 <= cfg.c0 * m && ns <= cfg.c1 * m.powf(params.gamma) {
            return Ok(outcome);
        }
        last = Some(TauOutcome { passed: false, ..outcome });
    }
    Ok(last.expect("at least one level scanned"))
}
