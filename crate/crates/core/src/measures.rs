//! Gaussian measure `μ_s`, Wick-ordered mass, the weighted measure `ρ_{s,γ}`
//! through importance weights, and deterministic parallel Monte Carlo.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FnlsError, Result};
use crate::scalar::{lit, Scalar};
use crate::spectral_core::{jb_pow, mass, project, FourierField, ModelParams};

/// Draws `u0 = Σ_{|n|≤N} g_n ⟨n⟩^{−s} e^{inx}` with `Re g, Im g ~ N(0, 1/2)`.
///
/// Sample `index` uses its own ChaCha stream keyed by `(seed, index)`, so a
/// draw never depends on which thread produced it or on earlier draws.
/// Modes are drawn in the order `0, 1, −1, 2, −2, …`, so `P_N` of a draw at
/// truncation `M ≥ N` equals the draw at truncation `N` with the same index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSampler {
    pub s: f64,
    pub n_trunc: usize,
    pub seed: u64,
}

impl GaussianSampler {
    pub fn new(s: f64, n_trunc: usize, seed: u64) -> Self {
        Self { s, n_trunc, seed }
    }

    pub fn sample<T: Scalar>(&self, index: u64) -> FourierField<T> {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let sd = std::f64::consts::FRAC_1_SQRT_2;
        let n = self.n_trunc as i64;
        let mut f = FourierField::zeros(self.n_trunc);
        let order = std::iter::once(0).chain((1..=n).flat_map(|k| [k, -k]));
        for k in order {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let w = sd / jb_pow(k, 0.5 * self.s);
            f.set(k, Complex::new(lit(re * w), lit(im * w)));
        }
        f
    }
}

/// `sample_mu_s(sampler, index)`.
pub fn sample_mu_s<T: Scalar>(sampler: &GaussianSampler, index: u64) -> FourierField<T> {
    sampler.sample(index)
}

/// `σ_N = Σ_{|n|≤N} ⟨n⟩^{−2s}`.
pub fn sigma_n(s: f64, n: usize) -> f64 {
    let tail: f64 = (1..=n as i64).rev().map(|k| 2.0 / jb_pow(k, s)).sum();
    1.0 + tail
}

/// `Σ_{|n|≤N} ⟨n⟩^{−4s}`, the variance of the Wick mass under `μ_s`.
pub fn wick_variance(s: f64, n: usize) -> f64 {
    sigma_n(2.0 * s, n)
}

/// `M(P_N f) − σ_N`.
pub fn wick_mass<T: Scalar>(f: &FourierField<T>, s: f64, n: usize) -> f64 {
    mass(&project(f, n)) - sigma_n(s, n)
}

/// `exp(−|M(P_N f) − σ_N|^γ)`.
pub fn rho_weight<T: Scalar>(f: &FourierField<T>, params: &ModelParams, n: usize) -> f64 {
    (-wick_mass(f, params.s, n).abs().powf(params.gamma)).exp()
}

/// Weighted Monte-Carlo mean `Σ w_i F_i / n` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    pub weight_sum: f64,
    /// Samples dropped because the functional or weight was not finite.
    pub flagged: usize,
}

/// Largest tolerated fraction of non-finite samples.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-3;

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().fold(0.0, |a, b| a + b);
    }
    let (l, r) = x.split_at(x.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

impl McEstimate {
    /// Estimate from per-sample `(weight, value)` pairs in index order.
    ///
    /// Non-finite pairs are dropped and counted; more than 0.1% of them is an error.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let total = pairs.len();
        let kept: Vec<(f64, f64)> = pairs.iter().copied().filter(|(w, f)| w.is_finite() && f.is_finite()).collect();
        let flagged = total - kept.len();
        if flagged as f64 > MAX_FLAGGED_FRACTION * total as f64 {
            return Err(FnlsError::TooManyNonFinite { flagged, total });
        }
        let n = kept.len();
        if n < 2 {
            return Err(FnlsError::Config("at least two finite samples are required".into()));
        }
        let terms: Vec<f64> = kept.iter().map(|(w, f)| w * f).collect();
        let weights: Vec<f64> = kept.iter().map(|(w, _)| *w).collect();
        let mean = pairwise_sum(&terms) / n as f64;
        let dev: Vec<f64> = terms.iter().map(|y| (y - mean) * (y - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Ok(Self { mean, stderr: (var / n as f64).sqrt(), count: n, weight_sum: pairwise_sum(&weights), flagged })
    }

    /// Estimate from unit-weight terms.
    pub fn from_terms(terms: &[f64]) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = terms.iter().map(|&y| (1.0, y)).collect();
        Self::from_pairs(&pairs)
    }

    /// `(self.mean − other.mean) / sqrt(se₁² + se₂²)`.
    pub fn z_against(&self, other: &Self) -> f64 {
        let se = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean) / se
        }
    }
}

/// Evaluates `f(index)` for `index ∈ 0..n` in parallel, returning results in index order.
pub fn par_map_indexed<R: Send>(n: usize, f: impl Fn(u64) -> R + Sync + Send) -> Vec<R> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// `E_{μ_s}[w(u) F(u)]` over `n_samples` indexed draws.
pub fn mc_expect<T, F, W>(functional: F, sampler: &GaussianSampler, n_samples: usize, weight_fn: W) -> Result<McEstimate>
where
    T: Scalar,
    F: Fn(&FourierField<T>) -> f64 + Sync + Send,
    W: Fn(&FourierField<T>) -> f64 + Sync + Send,
{
    if n_samples < 2 {
        return Err(FnlsError::Config("n_samples must be at least 2".into()));
    }
    let pairs = par_map_indexed(n_samples, |i| {
        let u = sampler.sample::<T>(i);
        (weight_fn(&u), functional(&u))
    });
    McEstimate::from_pairs(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_small_cases() {
        assert_eq!(sigma_n(0.3, 0), 1.0);
        assert!((sigma_n(0.5, 1) - (1.0 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn same_index_same_draw() {
        let s = GaussianSampler::new(0.45, 8, 11);
        let a: FourierField<f64> = s.sample(5);
        let b: FourierField<f64> = s.sample(5);
        let c: FourierField<f64> = s.sample(6);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn constant_functional_has_zero_error() {
        let s = GaussianSampler::new(0.45, 4, 1);
        let e = mc_expect::<f64, _, _>(|_| 2.5, &s, 100, |_| 1.0).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.count, 100);
    }

    #[test]
    fn too_many_flags_abort() {
        let mut p = vec![(1.0, 1.0); 999];
        p.push((1.0, f64::NAN));
        assert_eq!(McEstimate::from_pairs(&p).unwrap().flagged, 1);
        p.push((1.0, f64::INFINITY));
        assert!(matches!(McEstimate::from_pairs(&p), Err(FnlsError::TooManyNonFinite { .. })));
    }

    #[test]
    fn zero_wick_gives_unit_weight() {
        let p = ModelParams::new(2.0, 0.5, 3.0, 1).unwrap();
        let mut f = FourierField::<f64>::zeros(1);
        f.set(0, Complex::new(sigma_n(0.5, 1).sqrt(), 0.0));
        assert!((rho_weight(&f, &p, 1) - 1.0).abs() < 1e-15);
    }
}
