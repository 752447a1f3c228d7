//! Time integration of the truncated equation
//!
//! ```text
//! i u_t + (-∂x²)^α u + sign · P_N (N + R)(P_N u) = 0,
//! ```
//!
//! the linear propagator `S(t)`, the remainder equation, the gauge
//! transform and the closed form of the first Picard iterate `X⁽³⁾`.
//!
//! Integration runs in the interaction picture `w = S(−t)u`, so that
//! `w' = S(−t) · i·sign · P_N(N + R)(S(t)w)`. Modes `|n| > N` never enter
//! the nonlinearity and are propagated exactly by `S(t)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{FnlsError, Result};
use crate::scalar::{lit, to64, Scalar};
use crate::spectral_core::{band_mass, disp, CubicKernel, FourierField, GridSpec, ModelParams};

/// Time stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical RK4 on the interaction-picture variable.
    Ifrk4,
    /// Two-stage Gauss–Legendre collocation on the interaction-picture
    /// variable. Fourth order, symmetric, and conserves the mass exactly up
    /// to the stage-solver tolerance.
    Gauss4,
}

/// Which cubic term drives the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// `|u|²u − 2M(u)u`.
    Renormalized,
    /// `|u|²u`.
    FullCubic,
    /// No nonlinearity: `u(t) = S(t)u0`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: Nonlinearity,
    /// Stage-equation tolerance for [`Method::Gauss4`].
    #[serde(default = "default_implicit_tol")]
    pub implicit_tol: f64,
    #[serde(default = "default_implicit_max_iter")]
    pub implicit_max_iter: usize,
}

fn default_method() -> Method {
    Method::Ifrk4
}
fn default_record_every() -> usize {
    1
}
fn default_nonlinearity() -> Nonlinearity {
    Nonlinearity::Renormalized
}
fn default_implicit_tol() -> f64 {
    1e-14
}
fn default_implicit_max_iter() -> usize {
    200
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            method: default_method(),
            record_every: default_record_every(),
            nonlinearity: default_nonlinearity(),
            implicit_tol: default_implicit_tol(),
            implicit_max_iter: default_implicit_max_iter(),
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FnlsError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(FnlsError::Config("record_every must be positive".into()));
        }
        Ok(())
    }

    /// Number of uniform steps covering `|t|`; the effective step is `t / steps ≤ dt`.
    pub fn steps_for(&self, t: f64) -> usize {
        if t == 0.0 {
            0
        } else {
            ((t.abs() / self.dt) - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// Recorded states of a flow, stored in increasing time order.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<FourierField<T>>,
    pub params: ModelParams,
    pub grid: GridSpec,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(times: Vec<f64>, states: Vec<FourierField<T>>, params: ModelParams, grid: GridSpec) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(FnlsError::Config("times and states must be non-empty and of equal length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FnlsError::Config("times must be strictly increasing".into()));
        }
        Ok(Self { times, states, params, grid })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// State recorded at `t` (within `1e−9` relative to the spacing).
    pub fn at_time(&self, t: f64) -> Option<&FourierField<T>> {
        let tol = 1e-9 * self.spacing().unwrap_or(1.0).max(1e-300);
        self.times.iter().position(|&x| (x - t).abs() <= tol).map(|i| &self.states[i])
    }

    /// Common spacing when the grid is uniform.
    pub fn spacing(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = (self.t_max() - self.t_min()) / (self.times.len() - 1) as f64;
        let ok = self.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
        ok.then_some(h)
    }

    /// Sub-trajectory on `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Self {
        let tol = 1e-9 * self.spacing().unwrap_or(1.0);
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.times[i] >= lo - tol && self.times[i] <= hi + tol).collect();
        Self {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            states: idx.iter().map(|&i| self.states[i].clone()).collect(),
            params: self.params,
            grid: self.grid,
        }
    }

    /// Joins a trajectory on `[−a, 0]` with one on `[0, b]`.
    pub fn join(backward: Self, forward: Self) -> Result<Self> {
        let (Some(&tb), Some(&tf)) = (backward.times.last(), forward.times.first()) else {
            return Err(FnlsError::Config("empty trajectory".into()));
        };
        if (tb - tf).abs() > 1e-12 {
            return Err(FnlsError::Config("trajectories do not meet".into()));
        }
        let mut times = backward.times;
        let mut states = backward.states;
        times.pop();
        states.pop();
        times.extend(forward.times);
        states.extend(forward.states);
        Self::new(times, states, forward.params, forward.grid)
    }
}

#[inline]
pub(crate) fn cis<T: Scalar>(theta: f64) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(lit(c), lit(s))
}

/// `S(t)`: `c_n ↦ e^{it|n|^{2α}} c_n`.
pub fn linear_propagate<T: Scalar>(f: &FourierField<T>, t: f64, alpha: f64) -> FourierField<T> {
    let mut out = f.clone();
    let g = f.n_grid() as i64;
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c = *c * cis::<T>(t * disp(i as i64 - g, alpha));
    }
    out
}

/// Reusable integration engine for one `(params, grid, cfg)`.
///
/// Holds FFT plans and scratch space; create one per thread.
pub struct Propagator<T: Scalar> {
    params: ModelParams,
    grid: GridSpec,
    cfg: IntegratorConfig,
    omega: Vec<f64>,
    kernel: CubicKernel<T>,
    phase: Vec<Complex<T>>,
    offsets: Vec<(u64, Vec<Complex<f64>>)>,
    u: Vec<Complex<T>>,
    nl: Vec<Complex<T>>,
    stage: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> Propagator<T> {
    pub fn new(params: ModelParams, grid: GridSpec, cfg: IntegratorConfig) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        cfg.validate()?;
        let n = grid.n_trunc as i64;
        let len = grid.band_len();
        let zero = Complex::new(T::zero(), T::zero());
        Ok(Self {
            params,
            grid,
            cfg,
            omega: (-n..=n).map(|k| disp(k, params.alpha)).collect(),
            kernel: CubicKernel::new(grid)?,
            phase: vec![zero; len],
            offsets: Vec::new(),
            u: vec![zero; len],
            nl: vec![zero; len],
            stage: vec![vec![zero; len]; 8],
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    /// Loads `e^{i(t0 + dt)ω}` into the phase buffer, reusing cached `e^{i dt ω}` tables.
    fn load_phase(&mut self, base: &[Complex<f64>], dt: f64) {
        let key = dt.to_bits();
        let pos = match self.offsets.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                if self.offsets.len() > 8 {
                    self.offsets.clear();
                }
                self.offsets.push((key, self.omega.iter().map(|&om| Complex::from_polar(1.0, dt * om)).collect()));
                self.offsets.len() - 1
            }
        };
        let table = &self.offsets[pos].1;
        for ((p, b), e) in self.phase.iter_mut().zip(base).zip(table) {
            let z = b * e;
            *p = Complex::new(lit(z.re), lit(z.im));
        }
    }

    fn base_phase(&self, t: f64) -> Vec<Complex<f64>> {
        self.omega.iter().map(|&om| Complex::from_polar(1.0, t * om)).collect()
    }

    /// Interaction-picture vector field `F(t, w) = S(−t) i·sign·NL(S(t)(x0 + w))`
    /// with `S(t)` taken from the phase buffer.
    fn rhs(&mut self, w: &[Complex<T>], x0: Option<&[Complex<T>]>, out: &mut [Complex<T>]) {
        if self.cfg.nonlinearity == Nonlinearity::Linear {
            out.iter_mut().for_each(|o| *o = Complex::new(T::zero(), T::zero()));
            return;
        }
        for j in 0..w.len() {
            let base = match x0 {
                Some(x) => x[j] + w[j],
                None => w[j],
            };
            self.u[j] = self.phase[j] * base;
        }
        match self.cfg.nonlinearity {
            Nonlinearity::Renormalized => self.kernel.renormalized_band(&self.u, &mut self.nl),
            Nonlinearity::FullCubic => self.kernel.cubic_self_band(&self.u, &mut self.nl),
            Nonlinearity::Linear => unreachable!(),
        }
        let isg = Complex::new(T::zero(), lit::<T>(self.params.sign_f64()));
        for j in 0..w.len() {
            out[j] = self.phase[j].conj() * isg * self.nl[j];
        }
    }

    fn step_ifrk4(&mut self, t: f64, h: f64, w: &mut [Complex<T>], x0: Option<&[Complex<T>]>) {
        let mut st = std::mem::take(&mut self.stage);
        let (k, rest) = st.split_at_mut(4);
        let y = &mut rest[0];
        let hh: T = lit(h);
        let half: T = lit(0.5 * h);
        let base = self.base_phase(t);
        self.load_phase(&base, 0.0);
        self.rhs(w, x0, &mut k[0]);
        for j in 0..w.len() {
            y[j] = w[j] + k[0][j] * half;
        }
        self.load_phase(&base, 0.5 * h);
        self.rhs(y, x0, &mut k[1]);
        for j in 0..w.len() {
            y[j] = w[j] + k[1][j] * half;
        }
        self.rhs(y, x0, &mut k[2]);
        for j in 0..w.len() {
            y[j] = w[j] + k[2][j] * hh;
        }
        self.load_phase(&base, h);
        self.rhs(y, x0, &mut k[3]);
        let sixth: T = lit(h / 6.0);
        let two: T = lit(2.0);
        for j in 0..w.len() {
            w[j] = w[j] + (k[0][j] + k[1][j] * two + k[2][j] * two + k[3][j]) * sixth;
        }
        self.stage = st;
    }

    fn step_gauss4(&mut self, t: f64, h: f64, w: &mut [Complex<T>], x0: Option<&[Complex<T>]>) -> Result<()> {
        let r3 = 3f64.sqrt() / 6.0;
        let c = [0.5 - r3, 0.5 + r3];
        let a = [[0.25, 0.25 - r3], [0.25 + r3, 0.25]];
        let mut st = std::mem::take(&mut self.stage);
        let (k, rest) = st.split_at_mut(2);
        let (y, rest) = rest.split_at_mut(2);
        let knew = &mut rest[0..2];
        let base = self.base_phase(t);
        self.load_phase(&base, 0.0);
        self.rhs(w, x0, &mut k[0]);
        let k0 = k[0].clone();
        k[1].copy_from_slice(&k0);
        let scale = 1.0 + w.iter().map(|z| to64(z.norm())).fold(0.0, f64::max);
        let tol = self.cfg.implicit_tol.max(8.0 * to64(T::epsilon())) * scale;
        let mut converged = false;
        for _ in 0..self.cfg.implicit_max_iter {
            for i in 0..2 {
                let (ai0, ai1): (T, T) = (lit(h * a[i][0]), lit(h * a[i][1]));
                for j in 0..w.len() {
                    y[i][j] = w[j] + k[0][j] * ai0 + k[1][j] * ai1;
                }
            }
            for i in 0..2 {
                let (yi, ki) = (&y[i], &mut knew[i]);
                self.load_phase(&base, c[i] * h);
                self.rhs(yi, x0, ki);
            }
            let mut delta = 0.0f64;
            for i in 0..2 {
                for j in 0..w.len() {
                    delta = delta.max(to64((knew[i][j] - k[i][j]).norm()));
                }
                k[i].copy_from_slice(&knew[i]);
            }
            if delta * h.abs() <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            self.stage = st;
            return Err(FnlsError::Integration { t, reason: "stage equations did not converge".into() });
        }
        let hb: T = lit(0.5 * h);
        for j in 0..w.len() {
            w[j] = w[j] + (k[0][j] + k[1][j]) * hb;
        }
        self.stage = st;
        Ok(())
    }

    /// Advances `w` over `[t0, t0 + t]` in uniform steps, calling `record(k, t_k, w)`
    /// at every step index `k` (including `k = 0`).
    fn integrate(
        &mut self,
        w: &mut [Complex<T>],
        t0: f64,
        t: f64,
        x0: Option<&[Complex<T>]>,
        mut record: impl FnMut(usize, f64, &[Complex<T>]),
    ) -> Result<()> {
        let steps = self.cfg.steps_for(t);
        record(0, t0, w);
        if steps == 0 {
            return Ok(());
        }
        let h = t / steps as f64;
        for k in 0..steps {
            let tk = t0 + k as f64 * h;
            match self.cfg.method {
                Method::Ifrk4 => self.step_ifrk4(tk, h, w, x0),
                Method::Gauss4 => self.step_gauss4(tk, h, w, x0)?,
            }
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(FnlsError::Integration { t: tk + h, reason: "non-finite state".into() });
            }
            let tn = if k + 1 == steps { t0 + t } else { t0 + (k + 1) as f64 * h };
            record(k + 1, tn, w);
        }
        Ok(())
    }

    fn assemble(&self, u0: &FourierField<T>, w: &[Complex<T>], t: f64) -> FourierField<T> {
        let n = self.grid.n_trunc as i64;
        let g = u0.n_grid().max(self.grid.n_trunc);
        let mut out = FourierField::zeros(g);
        for k in -(g as i64)..=g as i64 {
            let ph = cis::<T>(t * disp(k, self.params.alpha));
            let v = if k.abs() <= n { w[(k + n) as usize] } else { u0.get(k) };
            out.set(k, ph * v);
        }
        out
    }

    /// `Φ_t^N(u0)` at the recorded times.
    pub fn flow(&mut self, u0: &FourierField<T>, t: f64) -> Result<Trajectory<T>> {
        let mut w = u0.band(self.grid.n_trunc);
        let steps = self.cfg.steps_for(t);
        let every = self.cfg.record_every;
        let mut rec: Vec<(f64, Vec<Complex<T>>)> = Vec::new();
        self.integrate(&mut w, 0.0, t, None, |k, tk, wk| {
            if k % every == 0 || k == steps {
                rec.push((tk, wk.to_vec()));
            }
        })?;
        let mut pairs: Vec<(f64, FourierField<T>)> = rec.iter().map(|(tk, wk)| (*tk, self.assemble(u0, wk, *tk))).collect();
        if t < 0.0 {
            pairs.reverse();
        }
        let (times, states) = pairs.into_iter().unzip();
        Trajectory::new(times, states, self.params, self.grid)
    }

    /// `Φ_t^N(u0)` without recording.
    pub fn flow_final(&mut self, u0: &FourierField<T>, t: f64) -> Result<FourierField<T>> {
        let mut w = u0.band(self.grid.n_trunc);
        self.integrate(&mut w, 0.0, t, None, |_, _, _| {})?;
        Ok(self.assemble(u0, &w, t))
    }

    /// `P_N Φ_t^N(u0)` at every step, as `(t_k, band)` in integration order.
    pub fn flow_bands(&mut self, u0: &FourierField<T>, t: f64) -> Result<Vec<(f64, Vec<Complex<T>>)>> {
        let n = self.grid.n_trunc;
        let mut w = u0.band(n);
        let omega = self.omega.clone();
        let mut out = Vec::with_capacity(self.cfg.steps_for(t) + 1);
        self.integrate(&mut w, 0.0, t, None, |_, tk, wk| {
            let u: Vec<Complex<T>> = wk.iter().zip(&omega).map(|(&z, &om)| cis::<T>(tk * om) * z).collect();
            out.push((tk, u));
        })?;
        Ok(out)
    }

    /// Remainder `v` with `Φ_t^N(u0 + v0) = S(t)(u0 + v0) + v(t)` on `[0, t]` (or `[t, 0]`).
    ///
    /// The free evolution `z(t) = S(t)P_N(u0 + v0)` enters as an explicit
    /// forcing evaluated at every stage time.
    pub fn remainder_flow(&mut self, u0: &FourierField<T>, v0: &FourierField<T>, t: f64) -> Result<Trajectory<T>> {
        let n = self.grid.n_trunc;
        let x0 = u0.add(v0).band(n);
        let mut w = vec![Complex::new(T::zero(), T::zero()); self.grid.band_len()];
        let steps = self.cfg.steps_for(t);
        let every = self.cfg.record_every;
        let omega = self.omega.clone();
        let mut pairs: Vec<(f64, FourierField<T>)> = Vec::new();
        self.integrate(&mut w, 0.0, t, Some(&x0), |k, tk, wk| {
            if k % every == 0 || k == steps {
                let v: Vec<Complex<T>> = wk.iter().zip(&omega).map(|(&z, &om)| cis::<T>(tk * om) * z).collect();
                pairs.push((tk, FourierField::from_band(&v)));
            }
        })?;
        if t < 0.0 {
            pairs.reverse();
        }
        let (times, states) = pairs.into_iter().unzip();
        Trajectory::new(times, states, self.params, self.grid)
    }

    /// Remainder on `[−a, b]`, joined from a backward and a forward run.
    pub fn remainder_two_sided(&mut self, u0: &FourierField<T>, a: f64, b: f64) -> Result<Trajectory<T>> {
        let zero = FourierField::zeros(self.grid.n_trunc);
        let back = self.remainder_flow(u0, &zero, -a)?;
        let fwd = self.remainder_flow(u0, &zero, b)?;
        Trajectory::join(back, fwd)
    }
}

/// `Φ_t^N(u0)` recorded every `cfg.record_every` steps.
pub fn flow<T: Scalar>(
    u0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<T>> {
    Propagator::new(*params, *grid, *cfg)?.flow(u0, t)
}

/// `Φ_{−t}^N(u0)` through the conjugation symmetry `Φ_{−t}(u) = conj(Φ_t(conj u))`.
pub fn backward_by_conjugation<T: Scalar>(
    u0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<FourierField<T>> {
    let mut p = Propagator::new(*params, *grid, *cfg)?;
    Ok(p.flow_final(&u0.conj_function(), t)?.conj_function())
}

/// Remainder trajectory, see [`Propagator::remainder_flow`].
pub fn remainder_flow<T: Scalar>(
    u0: &FourierField<T>,
    v0: &FourierField<T>,
    t: f64,
    params: &ModelParams,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<T>> {
    Propagator::new(*params, *grid, *cfg)?.remainder_flow(u0, v0, t)
}

/// Maps a solution of the unrenormalized truncated equation to one of the
/// renormalized equation.
///
/// With `v = e^{iθ(t)} u` on `|n| ≤ N`, the term `−θ' v` must equal
/// `−2·sign·M(P_N u)·v`, so `θ(t) = −2·sign·M(P_N u)·t`. The mass is
/// conserved by both flows. Modes `|n| > N` are linear in both equations
/// and are left untouched.
pub fn gauge_transform<T: Scalar>(traj: &Trajectory<T>) -> Trajectory<T> {
    let n = traj.grid.n_trunc as i64;
    let sign = traj.params.sign_f64();
    let states = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, u)| {
            let m = to64(band_mass(&u.band(n as usize)));
            let ph = cis::<T>(-2.0 * sign * m * t);
            let mut v = u.clone();
            for k in -n..=n {
                if k.unsigned_abs() as usize <= u.n_grid() {
                    v.set(k, u.get(k) * ph);
                }
            }
            v
        })
        .collect();
    Trajectory { times: traj.times.clone(), states, params: traj.params, grid: traj.grid }
}

/// `(e^{iz} − 1)/(iz)` without cancellation, equal to 1 at `z = 0`.
pub fn divided_difference_kernel(z: f64) -> Complex<f64> {
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let h = sinc(0.5 * z);
    Complex::new(sinc(z), 0.5 * z * h * h)
}

/// Closed form of `X⁽³⁾(t) = ∫₀ᵗ S(t − t') N_N(S(t')u0) dt'`:
///
/// ```text
/// X⁽³⁾(t)_{n4} = e^{it|n4|^{2α}} Σ u0(n1) conj(u0(n2)) u0(n3) (e^{itΦ} − 1)/(iΦ)
/// ```
///
/// summed over the non-resonant hyperplane with `|n_j| ≤ N`.
pub fn x3_exact<T: Scalar>(u0: &FourierField<T>, t: f64, params: &ModelParams, grid: &GridSpec) -> FourierField<T> {
    let n = grid.n_trunc as i64;
    let a: Vec<Complex<f64>> = (-n..=n).map(|k| {
        let c = u0.get(k);
        Complex::new(to64(c.re), to64(c.im))
    }).collect();
    let om: Vec<f64> = (-n..=n).map(|k| disp(k, params.alpha)).collect();
    let idx = |k: i64| (k + n) as usize;
    let mut out = vec![Complex::new(0.0, 0.0); (2 * n + 1) as usize];
    for n1 in -n..=n {
        for n2 in -n..=n {
            if n2 == n1 {
                continue;
            }
            let a12 = a[idx(n1)] * a[idx(n2)].conj();
            for n3 in -n..=n {
                let n4 = n1 - n2 + n3;
                if n2 == n3 || n4.abs() > n {
                    continue;
                }
                let phi = om[idx(n1)] - om[idx(n2)] + om[idx(n3)] - om[idx(n4)];
                out[idx(n4)] += a12 * a[idx(n3)] * divided_difference_kernel(t * phi) * t;
            }
        }
    }
    let band: Vec<Complex<T>> = out
        .iter()
        .zip(&om)
        .map(|(&c, &w)| {
            let z = c * Complex::from_polar(1.0, t * w);
            Complex::new(lit(z.re), lit(z.im))
        })
        .collect();
    FourierField::from_band(&band)
}
