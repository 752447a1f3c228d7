//! The quadrilinear functional `Q`, its time integral along the backward
//! flow, and the transported density `f_t^N` of `ρ_{s,γ}` under `Φ_t^N`.
//!
//! # Normalization
//!
//! `q_functional` is `Q(u1..u4) = Re Σ iΨ_s(n̄) û1(n1) conj(û2(n2)) û3(n3) conj(û4(n4))`
//! over `n1 − n2 + n3 = n4`, `n1 ∉ {n2, n4}`. Differentiating along the
//! renormalized flow gives
//!
//! ```text
//! d/dt ‖P_N u(t)‖²_{H^s} = −(sign/2) · Q(u, u, u, u)   =: transport_rate(u).
//! ```
//!
//! `μ_s` has density `∝ exp(−‖P_N u‖²_{H^s})` on the retained modes (the
//! complex Gaussians have `E|g|² = 1`), the flow preserves Lebesgue measure
//! and the weight `R_N`, so the density of `(Φ_t^N)_# ρ` with respect to `ρ` is
//!
//! ```text
//! f_t(u) = exp(‖P_N u‖²_{H^s} − ‖P_N Φ_{−t} u‖²_{H^s}) = exp(∫₀ᵗ transport_rate(P_N Φ_{−t'} u) dt').
//! ```
//!
//! The orientation and the absence of a factor ½ are confirmed by a Monte-Carlo
//! pushforward test in `tests/density_orientation.rs`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, Nonlinearity, Propagator};
use crate::error::{FnlsError, Result};
use crate::scalar::{lit, to64, Scalar};
use crate::spectral_core::{hs_norm_sq, jb_pow, project, psi_symbol, FourierField, GridSpec, ModelParams};

/// Largest exponent accepted before `exp` is reported as overflow.
pub const MAX_EXPONENT: f64 = 700.0;

/// Padded-grid evaluator for `Q`.
pub struct QEngine<T: Scalar> {
    n: usize,
    p: usize,
    s: f64,
    inv: Arc<dyn Fft<T>>,
    dsym: Vec<T>,
    bufs: Vec<Vec<Complex<T>>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> QEngine<T> {
    /// Engine for bands on `[−N, N]`; uses `grid.n_pad ≥ 4N + 1` points, so the
    /// quartic integrand is integrated exactly.
    pub fn new(grid: GridSpec, s: f64) -> Result<Self> {
        grid.validate()?;
        let inv = FftPlanner::new().plan_fft_inverse(grid.n_pad);
        let n = grid.n_trunc as i64;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(Self {
            n: grid.n_trunc,
            p: grid.n_pad,
            s,
            scratch: vec![zero; inv.get_inplace_scratch_len()],
            inv,
            dsym: (-n..=n).map(|k| lit(jb_pow(k, s))).collect(),
            bufs: vec![vec![zero; grid.n_pad]; 8],
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    fn physical(&mut self, slot: usize, a: &[Complex<T>], weighted: bool) {
        let n = self.n as i64;
        let p = self.p as i64;
        let buf = &mut self.bufs[slot];
        buf.iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        for (j, &c) in a.iter().enumerate() {
            let v = if weighted { c * self.dsym[j] } else { c };
            buf[(j as i64 - n).rem_euclid(p) as usize] = v;
        }
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }

    /// `Q(u, u, u, u)` for a band `a` on `[−N, N]`.
    ///
    /// With `D = ⟨∇⟩^{2s}` and `T1 = ∫ (Du) u ū²`, the unrestricted sum
    /// `ΣΨ_s A` equals `4i Im T1`; the excluded diagonals carry `Ψ_s = 0`.
    pub fn q_self(&mut self, a: &[Complex<T>]) -> f64 {
        self.physical(0, a, false);
        self.physical(1, a, true);
        let (u, du) = (&self.bufs[0], &self.bufs[1]);
        let mut acc = 0.0f64;
        for (x, d) in u.iter().zip(du) {
            let ubar = x.conj();
            acc += to64((*d * *x * ubar * ubar).im);
        }
        -4.0 * acc / self.p as f64
    }

    /// `Q(u1, u2, u3, u4)` for bands on `[−N, N]`.
    pub fn q_general(&mut self, a: [&[Complex<T>]; 4]) -> f64 {
        for (i, b) in a.iter().enumerate() {
            self.physical(2 * i, b, false);
            self.physical(2 * i + 1, b, true);
        }
        let b = &self.bufs;
        let mut acc = Complex::new(0.0f64, 0.0f64);
        for x in 0..self.p {
            let (u1, d1, u2, d2) = (b[0][x], b[1][x], b[2][x].conj(), b[3][x].conj());
            let (u3, d3, u4, d4) = (b[4][x], b[5][x], b[6][x].conj(), b[7][x].conj());
            let v = d1 * u2 * u3 * u4 - u1 * d2 * u3 * u4 + u1 * u2 * d3 * u4 - u1 * u2 * u3 * d4;
            acc += Complex::new(to64(v.re), to64(v.im));
        }
        -acc.im / self.p as f64
    }

    /// `−(sign/2) Q(u)`, the instantaneous growth rate of `‖P_N u‖²_{H^s}`.
    pub fn transport_rate(&mut self, a: &[Complex<T>], sign: f64) -> f64 {
        -0.5 * sign * self.q_self(a)
    }
}

fn support<T: Scalar>(fields: &[&FourierField<T>]) -> usize {
    fields
        .iter()
        .flat_map(|f| f.modes().filter(|(_, c)| c.norm_sqr() > T::zero()).map(|(n, _)| n.unsigned_abs() as usize))
        .max()
        .unwrap_or(0)
        .max(1)
}

/// `Q(u1, u2, u3, u4)` with Sobolev index `s`.
pub fn q_functional<T: Scalar>(
    u1: &FourierField<T>,
    u2: &FourierField<T>,
    u3: &FourierField<T>,
    u4: &FourierField<T>,
    s: f64,
) -> f64 {
    let n = support(&[u1, u2, u3, u4]);
    let mut e = QEngine::new(GridSpec::for_trunc(n), s).expect("grid from for_trunc is valid");
    let (b1, b2, b3, b4) = (u1.band(n), u2.band(n), u3.band(n), u4.band(n));
    e.q_general([&b1, &b2, &b3, &b4])
}

/// `O(N³)` direct sum of `Q` over the restricted hyperplane.
///
/// Also returns the imaginary part of `Σ iΨA`, which vanishes for `u1 = … = u4`.
pub fn q_functional_direct<T: Scalar>(
    u1: &FourierField<T>,
    u2: &FourierField<T>,
    u3: &FourierField<T>,
    u4: &FourierField<T>,
    s: f64,
) -> Complex<f64> {
    let n = support(&[u1, u2, u3, u4]) as i64;
    let c = |f: &FourierField<T>, k: i64| {
        let z = f.get(k);
        Complex::new(to64(z.re), to64(z.im))
    };
    let mut acc = Complex::new(0.0, 0.0);
    for n1 in -n..=n {
        for n2 in -n..=n {
            for n3 in -n..=n {
                let n4 = n1 - n2 + n3;
                if n4.abs() > n || n1 == n2 || n1 == n4 {
                    continue;
                }
                let a = c(u1, n1) * c(u2, n2).conj() * c(u3, n3) * c(u4, n4).conj();
                acc += Complex::new(0.0, psi_symbol(s, n1, n2, n3, n4)) * a;
            }
        }
    }
    acc
}

/// `−(sign/2) Q(P_N u)`, equal to `d/dt ‖P_N Φ_t u‖²_{H^s}` at `t = 0`.
pub fn transport_rate<T: Scalar>(u: &FourierField<T>, params: &ModelParams, n: usize) -> f64 {
    let mut e = QEngine::new(GridSpec::for_trunc(n), params.s).expect("grid from for_trunc is valid");
    e.transport_rate(&u.band(n), params.sign_f64())
}

/// Composite Simpson rule on uniform samples with signed spacing `h`.
///
/// An odd number of intervals closes with the 3/8 rule; a single interval
/// falls back to the trapezoid.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let m = y.len().saturating_sub(1);
    match m {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        _ => {
            let even = if m % 2 == 0 { m } else { m - 3 };
            let mut acc = 0.0;
            let mut i = 0;
            while i < even {
                acc += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
                i += 2;
            }
            if even < m {
                acc += 3.0 * h / 8.0 * (y[m - 3] + 3.0 * y[m - 2] + 3.0 * y[m - 1] + y[m]);
            }
            acc
        }
    }
}

/// Backward-flow evaluation of the density exponent for one initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub sample_index: u64,
    pub t: f64,
    /// `∫₀ᵗ transport_rate(P_N Φ_{−t'} u0) dt'` by Simpson's rule.
    pub q_integral: f64,
    /// `‖P_N u0‖²_{H^s} − ‖P_N Φ_{−t} u0‖²_{H^s}`.
    pub log_f_closed: f64,
    /// `exp(q_integral)`, infinite on overflow.
    pub f_t: f64,
    /// `exp(log_f_closed)`, infinite on overflow.
    pub f_t_closed: f64,
    pub weight: f64,
}

fn checked_exp(x: f64) -> Result<f64> {
    if x > MAX_EXPONENT || x.is_nan() {
        Err(FnlsError::Overflow { exponent: x })
    } else {
        Ok(x.exp())
    }
}

/// Reusable evaluator of `f_t^N` (flow engine plus `Q` engine).
pub struct DensityEvaluator<T: Scalar> {
    prop: Propagator<T>,
    q: QEngine<T>,
}

/// Output of a single backward run.
#[derive(Debug, Clone)]
pub struct BackwardRun<T> {
    pub q_integral: f64,
    pub log_f_closed: f64,
    /// `Φ_{−t}^N(u0)` restricted to `[−N, N]`.
    pub end: FourierField<T>,
}

impl<T: Scalar> DensityEvaluator<T> {
    pub fn new(params: ModelParams, grid: GridSpec, cfg: IntegratorConfig) -> Result<Self> {
        Ok(Self { prop: Propagator::new(params, grid, cfg)?, q: QEngine::new(grid, params.s)? })
    }

    pub fn propagator(&mut self) -> &mut Propagator<T> {
        &mut self.prop
    }

    /// Integrates `Φ_{−t'}` for `t' ∈ [0, t]` and evaluates both density exponents.
    ///
    /// The full cubic flow differs from the renormalized one by a real multiple
    /// of `iu`, so both share the rate; the free flow has rate zero.
    pub fn backward(&mut self, u0: &FourierField<T>, t: f64) -> Result<BackwardRun<T>> {
        let sign = match self.prop.config().nonlinearity {
            Nonlinearity::Linear => 0.0,
            _ => self.prop.params().sign_f64(),
        };
        let s = self.prop.params().s;
        let bands = self.prop.flow_bands(u0, -t)?;
        let rates: Vec<f64> = bands.iter().map(|(_, b)| self.q.transport_rate(b, sign)).collect();
        let steps = bands.len() - 1;
        let h = if steps == 0 { 0.0 } else { t / steps as f64 };
        let end = FourierField::from_band(&bands.last().unwrap().1);
        let n = self.prop.grid().n_trunc;
        let log_f_closed = hs_norm_sq(&project(u0, n), s) - hs_norm_sq(&end, s);
        Ok(BackwardRun { q_integral: simpson(&rates, h), log_f_closed, end })
    }

    pub fn record(&mut self, index: u64, u0: &FourierField<T>, t: f64, weight: f64) -> Result<DensityRecord> {
        let r = self.backward(u0, t)?;
        Ok(DensityRecord {
            sample_index: index,
            t,
            q_integral: r.q_integral,
            log_f_closed: r.log_f_closed,
            f_t: checked_exp(r.q_integral).unwrap_or(f64::INFINITY),
            f_t_closed: checked_exp(r.log_f_closed).unwrap_or(f64::INFINITY),
            weight,
        })
    }
}

/// `∫₀ᵗ transport_rate(P_N Φ_{−t'}^N u0) dt'` by composite Simpson on the integrator grid.
pub fn q_integral<T: Scalar>(
    u0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    Ok(DensityEvaluator::new(*params, *grid, *cfg)?.backward(u0, t)?.q_integral)
}

/// `exp(q_integral)`; overflow is an error carrying the exponent.
pub fn density_f<T: Scalar>(
    u0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    checked_exp(q_integral(u0, t, params, grid, cfg)?)
}

/// `‖P_N u0‖²_{H^s} − ‖P_N Φ_{−t}^N u0‖²_{H^s}`.
pub fn log_density_closed_form<T: Scalar>(
    u0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let mut p = Propagator::new(*params, *grid, *cfg)?;
    let end = p.flow_final(u0, -t)?;
    let n = grid.n_trunc;
    Ok(hs_norm_sq(&project(u0, n), params.s) - hs_norm_sq(&project(&end, n), params.s))
}

/// `exp` of [`log_density_closed_form`].
pub fn density_closed_form<T: Scalar>(
    u0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    checked_exp(log_density_closed_form(u0, t, params, grid, cfg)?)
}

/// `Σ |Ψ_s(n̄)|² Π ⟨n_j⟩^{−2s}` over `n1 − n2 + n3 = n4`, `n1 ∉ {n2, n4}`, `|n_j| ≤ N`.
pub fn q_variance_partial_sum(s: f64, n: usize) -> f64 {
    let n = n as i64;
    let dp: Vec<f64> = (-n..=n).map(|k| jb_pow(k, s)).collect();
    let idx = |k: i64| (k + n) as usize;
    let mut total = 0.0;
    for n1 in -n..=n {
        let mut row = 0.0;
        for n2 in -n..=n {
            if n2 == n1 {
                continue;
            }
            for n3 in -n..=n {
                let n4 = n1 - n2 + n3;
                if n4.abs() > n || n4 == n1 {
                    continue;
                }
                let (a, b, c, d) = (dp[idx(n1)], dp[idx(n2)], dp[idx(n3)], dp[idx(n4)]);
                let psi = a - b + c - d;
                row += psi * psi / (a * b * c * d);
            }
        }
        total += row;
    }
    total
}
