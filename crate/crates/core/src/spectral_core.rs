//! Torus Fourier representation, norms, projections and the renormalized
//! cubic nonlinearity split into non-resonant and resonant parts.
//!
//! Convention: `u(x) = Σ_n c_n e^{inx}` with normalized measure `dx/2π`,
//! so `∫|u|² = Σ|c_n|²`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{FnlsError, Result};
use crate::scalar::{lit, to64, Scalar};

/// Japanese bracket `⟨n⟩ = (1 + n²)^{1/2}`.
#[inline]
pub fn jb(n: i64) -> f64 {
    (1.0 + (n as f64) * (n as f64)).sqrt()
}

/// `⟨n⟩^{2s}`.
#[inline]
pub fn jb_pow(n: i64, s: f64) -> f64 {
    (1.0 + (n as f64) * (n as f64)).powf(s)
}

/// Dispersion `|n|^{2α}` with `|0|^{2α} = 0`; exact integer powers when `2α` is integral.
#[inline]
pub fn disp(n: i64, alpha: f64) -> f64 {
    let a = n.unsigned_abs();
    if a == 0 {
        return 0.0;
    }
    let e = 2.0 * alpha;
    if e.fract() == 0.0 && e <= 16.0 {
        (a as f64).powi(e as i32)
    } else {
        (e * (a as f64).ln()).exp()
    }
}

/// Phase function `Φ_α = |n1|^{2α} − |n2|^{2α} + |n3|^{2α} − |n4|^{2α}`.
pub fn phase_function(alpha: f64, n1: i64, n2: i64, n3: i64, n4: i64) -> f64 {
    disp(n1, alpha) - disp(n2, alpha) + disp(n3, alpha) - disp(n4, alpha)
}

/// Symbol `Ψ_s = ⟨n1⟩^{2s} − ⟨n2⟩^{2s} + ⟨n3⟩^{2s} − ⟨n4⟩^{2s}`.
pub fn psi_symbol(s: f64, n1: i64, n2: i64, n3: i64, n4: i64) -> f64 {
    jb_pow(n1, s) - jb_pow(n2, s) + jb_pow(n3, s) - jb_pow(n4, s)
}

/// Dispersion exponent, Gaussian regularity, weight exponent and sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub alpha: f64,
    pub s: f64,
    pub gamma: f64,
    #[serde(default = "default_sign")]
    pub sign: i32,
    /// Skips the `γ < 1/(1−2s)` check for exploratory runs.
    #[serde(default)]
    pub allow_gamma_override: bool,
}

fn default_sign() -> i32 {
    1
}

impl ModelParams {
    pub fn new(alpha: f64, s: f64, gamma: f64, sign: i32) -> Result<Self> {
        let p = Self { alpha, s, gamma, sign, allow_gamma_override: false };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`ModelParams::new`] without the upper bound on `γ`.
    pub fn new_unchecked_gamma(alpha: f64, s: f64, gamma: f64, sign: i32) -> Result<Self> {
        let p = Self { alpha, s, gamma, sign, allow_gamma_override: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FnlsError::Config(m));
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must exceed 1, got {}", self.alpha));
        }
        if !(self.s > 0.25 && self.s <= 0.5) {
            return bad(format!("s must lie in (1/4, 1/2], got {}", self.s));
        }
        if !(self.gamma > 2.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must exceed 2, got {}", self.gamma));
        }
        if !self.allow_gamma_override && self.s < 0.5 && self.gamma >= 1.0 / (1.0 - 2.0 * self.s) {
            return bad(format!(
                "gamma = {} must be below 1/(1-2s) = {}",
                self.gamma,
                1.0 / (1.0 - 2.0 * self.s)
            ));
        }
        if self.sign != 1 && self.sign != -1 {
            return bad(format!("sign must be +1 or -1, got {}", self.sign));
        }
        Ok(())
    }

    pub fn sign_f64(&self) -> f64 {
        self.sign as f64
    }
}

/// Galerkin cutoff and physical grid size for alias-free cubic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_trunc: usize,
    pub n_pad: usize,
}

impl GridSpec {
    pub fn new(n_trunc: usize, n_pad: usize) -> Result<Self> {
        let g = Self { n_trunc, n_pad };
        g.validate()?;
        Ok(g)
    }

    /// Smallest power of two with `n_pad ≥ 4N + 1`.
    pub fn for_trunc(n_trunc: usize) -> Self {
        Self { n_trunc, n_pad: (4 * n_trunc + 1).next_power_of_two() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trunc == 0 {
            return Err(FnlsError::Config("n_trunc must be positive".into()));
        }
        if self.n_pad < 4 * self.n_trunc + 1 {
            return Err(FnlsError::Config(format!(
                "n_pad = {} is below 4N+1 = {}",
                self.n_pad,
                4 * self.n_trunc + 1
            )));
        }
        Ok(())
    }

    /// Number of retained modes `2N + 1`.
    pub fn band_len(&self) -> usize {
        2 * self.n_trunc + 1
    }
}

/// Fourier coefficients on the symmetric frequency range `[−n_grid, n_grid]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField<T> {
    n_grid: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> FourierField<T> {
    pub fn zeros(n_grid: usize) -> Self {
        Self { n_grid, coeffs: vec![Complex::new(T::zero(), T::zero()); 2 * n_grid + 1] }
    }

    /// Builds a field from coefficients ordered from `−n_grid` to `n_grid`.
    pub fn from_coeffs(n_grid: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != 2 * n_grid + 1 {
            return Err(FnlsError::Config(format!(
                "expected {} coefficients, got {}",
                2 * n_grid + 1,
                coeffs.len()
            )));
        }
        let f = Self { n_grid, coeffs };
        if !f.is_finite() {
            return Err(FnlsError::Domain("non-finite Fourier coefficient".into()));
        }
        Ok(f)
    }

    /// Builds a field from `(frequency, amplitude)` pairs.
    pub fn from_modes(n_grid: usize, modes: &[(i64, Complex<T>)]) -> Self {
        let mut f = Self::zeros(n_grid);
        for &(n, c) in modes {
            f.set(n, c);
        }
        f
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Amplitude at frequency `n`, zero outside the grid.
    pub fn get(&self, n: i64) -> Complex<T> {
        if n.unsigned_abs() as usize > self.n_grid {
            Complex::new(T::zero(), T::zero())
        } else {
            self.coeffs[(n + self.n_grid as i64) as usize]
        }
    }

    /// Sets the amplitude at `n`; panics outside the grid.
    pub fn set(&mut self, n: i64, c: Complex<T>) {
        assert!(n.unsigned_abs() as usize <= self.n_grid, "frequency {n} outside grid");
        let i = (n + self.n_grid as i64) as usize;
        self.coeffs[i] = c;
    }

    /// Iterates `(n, c_n)` in increasing frequency.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        let g = self.n_grid as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - g, c))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Coefficients on `[−n, n]`, zero-extended if `n > n_grid`.
    pub fn band(&self, n: usize) -> Vec<Complex<T>> {
        (-(n as i64)..=n as i64).map(|k| self.get(k)).collect()
    }

    /// Copy with grid `n_grid`, truncating or zero-extending.
    pub fn resized(&self, n_grid: usize) -> Self {
        Self { n_grid, coeffs: self.band(n_grid) }
    }

    /// Field whose coefficients equal `band` on `[−n, n]`.
    pub fn from_band(band: &[Complex<T>]) -> Self {
        assert!(band.len() % 2 == 1, "band length must be odd");
        Self { n_grid: band.len() / 2, coeffs: band.to_vec() }
    }

    /// Coefficient-wise complex conjugate as a function, `c_n ↦ conj(c_{−n})`.
    pub fn conj_function(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        coeffs.iter_mut().for_each(|c| *c = c.conj());
        Self { n_grid: self.n_grid, coeffs }
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self { n_grid: self.n_grid, coeffs: self.coeffs.iter().map(|&c| c * k).collect() }
    }

    /// Sum on the larger of the two grids.
    pub fn add(&self, other: &Self) -> Self {
        let g = self.n_grid.max(other.n_grid);
        let coeffs = (-(g as i64)..=g as i64).map(|n| self.get(n) + other.get(n)).collect();
        Self { n_grid: g, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    /// `Σ a_n conj(b_n)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let g = self.n_grid.min(other.n_grid) as i64;
        (-g..=g).map(|n| self.get(n) * other.get(n).conj()).fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }

    /// L² distance in `f64`.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        mass(&self.sub(other)).sqrt()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> FourierField<U> {
        FourierField {
            n_grid: self.n_grid,
            coeffs: self.coeffs.iter().map(|c| Complex::new(lit::<U>(to64(c.re)), lit::<U>(to64(c.im)))).collect(),
        }
    }
}

/// Sharp projection `P_N`; keeps the grid size.
pub fn project<T: Scalar>(f: &FourierField<T>, n: usize) -> FourierField<T> {
    let mut out = f.clone();
    let g = f.n_grid() as i64;
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        if (i as i64 - g).unsigned_abs() as usize > n {
            *c = Complex::new(T::zero(), T::zero());
        }
    }
    out
}

/// `Σ ⟨n⟩^{2s} |c_n|²`.
pub fn hs_norm_sq<T: Scalar>(f: &FourierField<T>, s: f64) -> f64 {
    f.modes().map(|(n, c)| jb_pow(n, s) * to64(c.norm_sqr())).sum()
}

/// ℓ^p norm of `⟨n⟩^s c_n`; `p = ∞` gives the maximum.
pub fn fl_norm<T: Scalar>(f: &FourierField<T>, s: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    let terms = f.modes().map(|(n, c)| jb(n).powf(s) * to64(c.norm()));
    if p.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `M(u) = Σ |c_n|²`.
pub fn mass<T: Scalar>(f: &FourierField<T>) -> f64 {
    f.coeffs().iter().map(|c| to64(c.norm_sqr())).sum()
}

/// Mass of a coefficient band.
pub(crate) fn band_mass<T: Scalar>(a: &[Complex<T>]) -> T {
    a.iter().map(|c| c.norm_sqr()).fold(T::zero(), |x, y| x + y)
}

/// Padded FFT workspace for products of band-limited fields.
///
/// One kernel per thread; the methods take `&mut self` for scratch reuse.
pub struct CubicKernel<T: Scalar> {
    grid: GridSpec,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    bufs: [Vec<Complex<T>>; 3],
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> CubicKernel<T> {
    pub fn new(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n_pad);
        let inv = planner.plan_fft_inverse(grid.n_pad);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let zero = Complex::new(T::zero(), T::zero());
        Ok(Self {
            grid,
            fwd,
            inv,
            bufs: [vec![zero; grid.n_pad], vec![zero; grid.n_pad], vec![zero; grid.n_pad]],
            scratch: vec![zero; len],
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Physical values of the band `a` (length `2N+1`) in buffer `slot`.
    fn to_physical(&mut self, slot: usize, a: &[Complex<T>]) {
        let n = self.grid.n_trunc as i64;
        let p = self.grid.n_pad as i64;
        debug_assert_eq!(a.len(), self.grid.band_len());
        let buf = &mut self.bufs[slot];
        buf.iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        for (j, &c) in a.iter().enumerate() {
            buf[(j as i64 - n).rem_euclid(p) as usize] = c;
        }
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }

    /// Transforms buffer 0 back and writes the band `[−N, N]` into `out`.
    fn band_from_physical(&mut self, out: &mut [Complex<T>]) {
        let n = self.grid.n_trunc as i64;
        let p = self.grid.n_pad as i64;
        self.fwd.process_with_scratch(&mut self.bufs[0], &mut self.scratch);
        let norm = T::one() / lit::<T>(p as f64);
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.bufs[0][(j as i64 - n).rem_euclid(p) as usize] * norm;
        }
    }

    /// `P_N(u1 ū2 u3)` for bands `a1, a2, a3` on `[−N, N]`.
    pub fn full_cubic_band(&mut self, a1: &[Complex<T>], a2: &[Complex<T>], a3: &[Complex<T>], out: &mut [Complex<T>]) {
        self.to_physical(0, a1);
        self.to_physical(1, a2);
        self.to_physical(2, a3);
        let [b0, b1, b2] = &mut self.bufs;
        for ((x, y), z) in b0.iter_mut().zip(b1.iter()).zip(b2.iter()) {
            *x = *x * y.conj() * *z;
        }
        self.band_from_physical(out);
    }

    /// `P_N(|u|²u)` for a band `a` on `[−N, N]`.
    pub fn cubic_self_band(&mut self, a: &[Complex<T>], out: &mut [Complex<T>]) {
        self.to_physical(0, a);
        for x in self.bufs[0].iter_mut() {
            *x = *x * x.norm_sqr();
        }
        self.band_from_physical(out);
    }

    /// `P_N (N + R)(u) = P_N(|u|²u) − 2 M(u) u` for a band `a`.
    pub fn renormalized_band(&mut self, a: &[Complex<T>], out: &mut [Complex<T>]) {
        self.cubic_self_band(a, out);
        let two_m = lit::<T>(2.0) * band_mass(a);
        for (o, &c) in out.iter_mut().zip(a) {
            *o = *o - c * two_m;
        }
    }

    /// Non-resonant part `P_N N(u1, u2, u3)` of bands on `[−N, N]`.
    ///
    /// The full product is corrected on the strata `n2 = n1` and `n2 = n3`
    /// and their intersection `n1 = n2 = n3`.
    pub fn nonres_band(&mut self, a1: &[Complex<T>], a2: &[Complex<T>], a3: &[Complex<T>], out: &mut [Complex<T>]) {
        self.full_cubic_band(a1, a2, a3, out);
        let zero = Complex::new(T::zero(), T::zero());
        let p12 = a1.iter().zip(a2).fold(zero, |acc, (x, y)| acc + *x * y.conj());
        let p32 = a3.iter().zip(a2).fold(zero, |acc, (x, y)| acc + *x * y.conj());
        for j in 0..out.len() {
            out[j] = out[j] - p12 * a3[j] - p32 * a1[j] + a1[j] * a2[j].conj() * a3[j];
        }
    }
}

fn check_support<T: Scalar>(f: &FourierField<T>, n: usize) -> Result<()> {
    if f.modes().any(|(k, c)| k.unsigned_abs() as usize > n && c.norm_sqr() > T::zero()) {
        return Err(FnlsError::Config(format!("input not supported in [-{n}, {n}]")));
    }
    Ok(())
}

/// `N(u1, u2, u3)` on `[−N, N]`: sum over `n1 − n2 + n3 = n4` with `n2 ∉ {n1, n3}`.
///
/// Output frequencies are restricted to `|n4| ≤ N`, which is alias-free for
/// `n_pad ≥ 4N + 1`.
pub fn nonres_trilinear<T: Scalar>(
    u1: &FourierField<T>,
    u2: &FourierField<T>,
    u3: &FourierField<T>,
    grid: &GridSpec,
) -> Result<FourierField<T>> {
    let n = grid.n_trunc;
    for u in [u1, u2, u3] {
        check_support(u, n)?;
    }
    let mut k = CubicKernel::new(*grid)?;
    let mut out = vec![Complex::new(T::zero(), T::zero()); grid.band_len()];
    k.nonres_band(&u1.band(n), &u2.band(n), &u3.band(n), &mut out);
    Ok(FourierField::from_band(&out))
}

/// `P_N(u1 ū2 u3)` by padded transforms.
pub fn full_cubic<T: Scalar>(
    u1: &FourierField<T>,
    u2: &FourierField<T>,
    u3: &FourierField<T>,
    grid: &GridSpec,
) -> Result<FourierField<T>> {
    let n = grid.n_trunc;
    for u in [u1, u2, u3] {
        check_support(u, n)?;
    }
    let mut k = CubicKernel::new(*grid)?;
    let mut out = vec![Complex::new(T::zero(), T::zero()); grid.band_len()];
    k.full_cubic_band(&u1.band(n), &u2.band(n), &u3.band(n), &mut out);
    Ok(FourierField::from_band(&out))
}

/// `R(u1, u2, u3)_n = −u1_n conj(u2_n) u3_n` on the largest common grid.
pub fn resonant_trilinear<T: Scalar>(u1: &FourierField<T>, u2: &FourierField<T>, u3: &FourierField<T>) -> FourierField<T> {
    let g = u1.n_grid().max(u2.n_grid()).max(u3.n_grid());
    let coeffs = (-(g as i64)..=g as i64).map(|n| -(u1.get(n) * u2.get(n).conj() * u3.get(n))).collect();
    FourierField { n_grid: g, coeffs }
}

/// Direct lattice sums used as oracles for the fast paths.
pub mod oracle {
    use super::*;

    /// Exclusion convention for the non-resonant sum.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Exclusion {
        /// `n2 ∉ {n1, n3}`.
        N2,
        /// `n1 ∉ {n2, n4}`.
        N1,
    }

    /// `O(N³)` evaluation of `N(u1, u2, u3)` on `|n4| ≤ N`.
    pub fn nonres_direct<T: Scalar>(
        u1: &FourierField<T>,
        u2: &FourierField<T>,
        u3: &FourierField<T>,
        n: usize,
        excl: Exclusion,
    ) -> FourierField<T> {
        let n = n as i64;
        let mut out = FourierField::zeros(n as usize);
        for n1 in -n..=n {
            for n2 in -n..=n {
                for n3 in -n..=n {
                    let n4 = n1 - n2 + n3;
                    if n4.abs() > n {
                        continue;
                    }
                    let skip = match excl {
                        Exclusion::N2 => n2 == n1 || n2 == n3,
                        Exclusion::N1 => n1 == n2 || n1 == n4,
                    };
                    if skip {
                        continue;
                    }
                    let v = out.get(n4) + u1.get(n1) * u2.get(n2).conj() * u3.get(n3);
                    out.set(n4, v);
                }
            }
        }
        out
    }

    /// `O(N³)` evaluation of `P_N(u1 ū2 u3)` without exclusions.
    pub fn full_cubic_direct<T: Scalar>(
        u1: &FourierField<T>,
        u2: &FourierField<T>,
        u3: &FourierField<T>,
        n: usize,
    ) -> FourierField<T> {
        let n = n as i64;
        let mut out = FourierField::zeros(n as usize);
        for n1 in -n..=n {
            for n2 in -n..=n {
                for n3 in -n..=n {
                    let n4 = n1 - n2 + n3;
                    if n4.abs() <= n {
                        let v = out.get(n4) + u1.get(n1) * u2.get(n2).conj() * u3.get(n3);
                        out.set(n4, v);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn norms_of_small_fields() {
        let f = FourierField::from_modes(3, &[(0, c(1.0, 0.0)), (1, c(0.0, 2.0))]);
        assert_eq!(mass(&f), 5.0);
        assert_eq!(hs_norm_sq(&f, 0.0), 5.0);
        let g = FourierField::from_modes(2, &[(1, c(1.0, 0.0))]);
        assert!((hs_norm_sq(&g, 0.5) - 2f64.sqrt()).abs() < 1e-15);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((fl_norm(&g, 0.7, p) - 2f64.sqrt().powf(0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn sharp_cutoff() {
        let f = FourierField::from_modes(6, &[(0, c(1.0, 0.0)), (5, c(2.0, 0.0))]);
        let p = project(&f, 2);
        assert_eq!(p, FourierField::from_modes(6, &[(0, c(1.0, 0.0))]));
    }

    #[test]
    fn two_mode_nonresonant_sum() {
        let u = FourierField::from_modes(2, &[(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]);
        let g = GridSpec::for_trunc(2);
        let out = nonres_trilinear(&u, &u, &u, &g).unwrap();
        let expect = FourierField::from_modes(2, &[(-1, c(1.0, 0.0)), (2, c(1.0, 0.0))]);
        assert!(out.l2_distance(&expect) < 1e-14, "{out:?}");
    }

    #[test]
    fn small_pad_rejected() {
        assert!(GridSpec::new(4, 16).is_err());
        assert!(GridSpec::new(4, 17).is_ok());
        assert_eq!(GridSpec::for_trunc(16).n_pad, 128);
    }

    #[test]
    fn phase_and_symbol_values() {
        assert_eq!(phase_function(1.0, 3, 1, 0, 2), 4.0);
        assert_eq!(phase_function(2.0, 1, 1, 2, 2), 0.0);
        assert!((phase_function(1.5, 2, 0, 1, 3) + 18.0).abs() < 1e-12);
        assert_eq!(psi_symbol(0.37, 2, 2, 5, 5), 0.0);
        let e = 10f64.sqrt() - 2f64.sqrt() + 1.0 - 5f64.sqrt();
        assert!((psi_symbol(0.5, 3, 1, 0, 2) - e).abs() < 1e-14);
    }

    #[test]
    fn dispersion_at_zero_and_integer_powers() {
        assert_eq!(disp(0, 1.3), 0.0);
        assert_eq!(disp(-3, 2.0), 81.0);
        assert!((disp(5, 1.1) - 5f64.powf(2.2)).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(2.0, 0.45, 3.0, 1).is_ok());
        assert!(ModelParams::new(1.0, 0.45, 3.0, 1).is_err());
        assert!(ModelParams::new(2.0, 0.2, 3.0, 1).is_err());
        assert!(ModelParams::new(2.0, 0.3, 3.0, 1).is_err());
        assert!(ModelParams::new_unchecked_gamma(2.0, 0.3, 3.0, 1).is_ok());
        assert!(ModelParams::new(2.0, 0.5, 30.0, -1).is_ok());
        assert!(ModelParams::new(2.0, 0.5, 3.0, 0).is_err());
    }

    #[test]
    fn conjugate_function_mirrors() {
        let f = FourierField::from_modes(2, &[(1, c(1.0, 2.0)), (-2, c(0.5, -1.0))]);
        let g = f.conj_function();
        assert_eq!(g.get(-1), c(1.0, -2.0));
        assert_eq!(g.get(2), c(0.5, 1.0));
    }
}
