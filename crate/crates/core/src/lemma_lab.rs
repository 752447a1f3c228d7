//! Exhaustive lattice scans of the phase and symbol bounds, and the closed-form
//! exponent bookkeeping (`s_*`, `θ_*`, `c`, admissibility, growth and tail exponents).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FnlsError, Result};
use crate::spectral_core::{disp, jb, jb_pow, psi_symbol};

/// Extremal ratio of one bound over a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStat {
    pub name: String,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub witness_min: [i64; 4],
    pub witness_max: [i64; 4],
}

/// Result of a lattice scan over `n1 − n2 + n3 = n4`, `|n_j| ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lemma_id: String,
    pub n_max: i64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Tuple attaining `min_ratio` (phase scan) or `max_ratio` (symbol scan).
    pub witness: [i64; 4],
    pub pass: bool,
    pub bounds: Vec<BoundStat>,
    pub tuples: u64,
}

#[derive(Clone, Copy)]
struct Ext {
    min: f64,
    wmin: [i64; 4],
    max: f64,
    wmax: [i64; 4],
}

impl Ext {
    fn new() -> Self {
        Self { min: f64::INFINITY, wmin: [0; 4], max: f64::NEG_INFINITY, wmax: [0; 4] }
    }

    fn push(&mut self, v: f64, w: [i64; 4]) {
        if v < self.min {
            self.min = v;
            self.wmin = w;
        }
        if v > self.max {
            self.max = v;
            self.wmax = w;
        }
    }

    /// Order-independent merge (ties keep the lexicographically smaller witness).
    fn merge(mut self, o: Self) -> Self {
        if o.min < self.min || (o.min == self.min && o.wmin < self.wmin) {
            self.min = o.min;
            self.wmin = o.wmin;
        }
        if o.max > self.max || (o.max == self.max && o.wmax < self.wmax) {
            self.max = o.max;
            self.wmax = o.wmax;
        }
        self
    }

    fn stat(&self, name: &str) -> BoundStat {
        BoundStat { name: name.into(), min_ratio: self.min, max_ratio: self.max, witness_min: self.wmin, witness_max: self.wmax }
    }
}

/// Scans tuples in parallel over `n1`; `f` pushes ratios into the `K` accumulators.
fn scan<const K: usize>(n_max: i64, f: impl Fn(i64, i64, i64, i64, &mut [Ext; K]) + Sync) -> ([Ext; K], u64) {
    let parts: Vec<([Ext; K], u64)> = (-n_max..=n_max)
        .into_par_iter()
        .map(|n1| {
            let mut acc = [Ext::new(); K];
            let mut count = 0u64;
            for n2 in -n_max..=n_max {
                for n3 in -n_max..=n_max {
                    let n4 = n1 - n2 + n3;
                    if n4.abs() > n_max {
                        continue;
                    }
                    count += 1;
                    f(n1, n2, n3, n4, &mut acc);
                }
            }
            (acc, count)
        })
        .collect();
    let mut total = [Ext::new(); K];
    let mut count = 0;
    for (p, c) in parts {
        for k in 0..K {
            total[k] = total[k].merge(p[k]);
        }
        count += c;
    }
    (total, count)
}

/// `|Φ_α| / (|n4 − n1| |n4 − n3| n_max^{2α−2})` with `n_max = max|n_j| + 1`.
pub fn phase_ratio(alpha: f64, n: [i64; 4]) -> f64 {
    let [n1, n2, n3, n4] = n;
    let phi = disp(n1, alpha) - disp(n2, alpha) + disp(n3, alpha) - disp(n4, alpha);
    let m = n.iter().map(|k| k.abs()).max().unwrap() as f64 + 1.0;
    phi.abs() / (((n4 - n1).abs() * (n4 - n3).abs()) as f64 * m.powf(2.0 * alpha - 2.0))
}

/// Phase lower bound over the non-resonant set `n2 ∉ {n1, n3}`.
///
/// Bound stats: `ratio` (the normalized bound) and `abs_phase` (`|Φ_α|` itself).
pub fn phase_bound_scan(alpha: f64, n_max: i64) -> Result<ScanReport> {
    if !(alpha > 0.5) {
        return Err(FnlsError::Domain(format!("alpha = {alpha} must exceed 1/2")));
    }
    let (acc, tuples) = scan::<2>(n_max, |n1, n2, n3, n4, acc| {
        if n2 == n1 || n2 == n3 {
            return;
        }
        let w = [n1, n2, n3, n4];
        acc[0].push(phase_ratio(alpha, w), w);
        let phi = disp(n1, alpha) - disp(n2, alpha) + disp(n3, alpha) - disp(n4, alpha);
        acc[1].push(phi.abs(), w);
    });
    let pass = acc[0].min > 0.0 && acc[1].min > 0.0 && acc[0].min.is_finite();
    Ok(ScanReport {
        lemma_id: "phase".into(),
        n_max,
        min_ratio: acc[0].min,
        max_ratio: acc[0].max,
        witness: acc[0].wmin,
        pass,
        bounds: vec![acc[0].stat("ratio"), acc[1].stat("abs_phase")],
        tuples,
    })
}

/// Exact check of `Φ_1 = −2(n4 − n1)(n4 − n3)` in integer arithmetic.
///
/// Returns `(tuples checked, mismatches)`.
pub fn phase_factorization_exact(n_max: i64) -> (u64, u64) {
    let mut checked = 0;
    let mut bad = 0;
    for n1 in -n_max..=n_max {
        for n2 in -n_max..=n_max {
            for n3 in -n_max..=n_max {
                let n4 = n1 - n2 + n3;
                if n4.abs() > n_max {
                    continue;
                }
                checked += 1;
                let lhs = n1 * n1 - n2 * n2 + n3 * n3 - n4 * n4;
                if lhs != -2 * (n4 - n1) * (n4 - n3) {
                    bad += 1;
                }
            }
        }
    }
    (checked, bad)
}

/// Names of the symbol bounds, in the order reported by [`psi_bound_scan`].
pub const PSI_BOUNDS: [&str; 4] = ["psi_min", "psi_product", "psi_lemma_12", "psi_lemma_14"];

/// Ratio `|Ψ_s| / bound` for bound index `k` of [`PSI_BOUNDS`].
pub fn psi_ratio(s: f64, k: usize, n: [i64; 4]) -> f64 {
    let [n1, n2, n3, n4] = n;
    let psi = psi_symbol(s, n1, n2, n3, n4).abs();
    let e = 1.0 - 2.0 * s;
    let g = |a: i64| jb(a).powf(e);
    let denom = match k {
        0 => jb_pow(n1 - n2, s).min(jb_pow(n1 - n4, s)),
        1 => jb(n1 - n2).powf(s) * jb(n1 - n4).powf(s),
        2 => jb(n1 - n2) / (g(n1).max(g(n2))).min(g(n3).max(g(n4))),
        3 => jb(n1 - n4) / (g(n1).max(g(n4))).min(g(n2).max(g(n3))),
        _ => panic!("bound index {k} out of range"),
    };
    psi / denom
}

/// Extremal constants of the four symbol bounds over non-diagonal tuples
/// (`n1 ∉ {n2, n4}`; on the diagonals `Ψ_s = 0`).
///
/// The top-level `max_ratio` is the first bound's constant.
pub fn psi_bound_scan(s: f64, n_max: i64) -> Result<ScanReport> {
    if !(s > 0.0 && s <= 0.5) {
        return Err(FnlsError::Domain(format!("s = {s} must lie in (0, 1/2]")));
    }
    let lemma = s > 0.25;
    let (acc, tuples) = scan::<4>(n_max, |n1, n2, n3, n4, acc| {
        if n1 == n2 || n1 == n4 {
            return;
        }
        let w = [n1, n2, n3, n4];
        let kmax = if lemma { 4 } else { 2 };
        for (k, a) in acc.iter_mut().enumerate().take(kmax) {
            a.push(psi_ratio(s, k, w), w);
        }
    });
    let used = if lemma { 4 } else { 2 };
    let bounds: Vec<BoundStat> = (0..used).map(|k| acc[k].stat(PSI_BOUNDS[k])).collect();
    let pass = bounds.iter().all(|b| b.max_ratio.is_finite());
    Ok(ScanReport {
        lemma_id: "psi".into(),
        n_max,
        min_ratio: acc[0].min,
        max_ratio: acc[0].max,
        witness: acc[0].wmax,
        pass,
        bounds,
        tuples,
    })
}

/// Branch point `(35 + √105)/32` of `s_*`.
pub fn sstar_branch_point() -> f64 {
    (35.0 + 105f64.sqrt()) / 32.0
}

/// First branch of `s_*`, used for `1 < α ≤ (35 + √105)/32`.
pub fn sstar_low(alpha: f64) -> f64 {
    0.25 * ((68.0 * alpha * alpha - 52.0 * alpha + 9.0).sqrt() - 10.0 * alpha + 7.0)
}

/// Second branch of `s_*`, used above the branch point.
pub fn sstar_high(alpha: f64) -> f64 {
    0.5 * ((4.0 * alpha * alpha - 2.0 * alpha + 1.0).sqrt() - 2.0 * alpha + 1.0)
}

/// Regularity threshold `s_*(α)` above which the weighted data is admissible.
pub fn sstar(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(FnlsError::Domain(format!("alpha = {alpha} must exceed 1")));
    }
    Ok(if alpha <= sstar_branch_point() { sstar_low(alpha) } else { sstar_high(alpha) })
}

/// Comparison of `s_* − 1/2` with the deterministic threshold `(1 − α)/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub s_star: f64,
    pub probabilistic: f64,
    pub deterministic: f64,
    pub beats_deterministic: bool,
}

pub fn threshold_comparison(alpha: f64) -> Result<ThresholdReport> {
    let s = sstar(alpha)?;
    let probabilistic = s - 0.5;
    let deterministic = (1.0 - alpha) / 3.0;
    Ok(ThresholdReport { alpha, s_star: s, probabilistic, deterministic, beats_deterministic: probabilistic < deterministic })
}

/// Closed form `(17 + 3√21)/20` of the crossover.
pub fn crossover_closed_form() -> f64 {
    (17.0 + 3.0 * 21f64.sqrt()) / 20.0
}

/// Crossover of the two thresholds by bisection on `(1, 3]`.
pub fn crossover_numeric() -> f64 {
    let f = |a: f64| {
        let r = threshold_comparison(a).expect("alpha > 1");
        r.probabilistic - r.deterministic
    };
    bisect(f, 1.0 + 1e-9, 3.0, 1e-14)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exponents derived from `(α, s, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumerologyReport {
    pub alpha: f64,
    pub s: f64,
    pub gamma: f64,
    pub s_star: f64,
    pub theta_star: f64,
    pub c_exp: f64,
    /// Growth exponent `A`; `None` when the condition fails.
    pub growth_a: Option<f64>,
    /// Tail exponent `(2α − 1)γ/(2α)`.
    pub beta: f64,
    pub admissible: bool,
}

fn low_branch(alpha: f64, s: f64) -> bool {
    alpha <= 1.25 + 0.5 * s
}

/// `θ_*(α, s)`.
pub fn theta_star(alpha: f64, s: f64) -> f64 {
    if low_branch(alpha, s) {
        (4.0 * alpha + 2.0 * s - 3.0) / (4.0 * alpha)
    } else {
        (1.0 + 2.0 * s) / (2.0 * alpha)
    }
}

/// `c(α, s, γ)`.
pub fn c_exp(alpha: f64, s: f64, gamma: f64) -> f64 {
    if low_branch(alpha, s) {
        4.0 + (gamma - 1.0) * (5.0 + 2.0 * s - 4.0 * alpha) / (2.0 * s)
    } else {
        4.0
    }
}

/// `2γ − c − 4αθ_*/(2α − 1)`, positive exactly when the second half of the condition holds.
pub fn condition_margin(alpha: f64, s: f64, gamma: f64) -> f64 {
    2.0 * gamma - c_exp(alpha, s, gamma) - 4.0 * alpha * theta_star(alpha, s) / (2.0 * alpha - 1.0)
}

/// `γ < 1/(1 − 2s)` and `2γ > 4αθ_*/(2α − 1) + c`, with zero slack in every exponent.
pub fn admissible(alpha: f64, s: f64, gamma: f64) -> bool {
    let gmax = if s >= 0.5 { f64::INFINITY } else { 1.0 / (1.0 - 2.0 * s) };
    gamma < gmax && condition_margin(alpha, s, gamma) > 0.0
}

pub fn numerology(alpha: f64, s: f64, gamma: f64) -> Result<NumerologyReport> {
    if !(alpha > 1.0) || !(s > 0.25 && s <= 0.5) || !(gamma > 2.0) {
        return Err(FnlsError::Domain(format!("(alpha, s, gamma) = ({alpha}, {s}, {gamma}) out of domain")));
    }
    let adm = admissible(alpha, s, gamma);
    let margin = condition_margin(alpha, s, gamma);
    Ok(NumerologyReport {
        alpha,
        s,
        gamma,
        s_star: sstar(alpha)?,
        theta_star: theta_star(alpha, s),
        c_exp: c_exp(alpha, s, gamma),
        growth_a: adm.then(|| 2.0 * gamma / margin),
        beta: (2.0 * alpha - 1.0) * gamma / (2.0 * alpha),
        admissible: adm,
    })
}

/// Smallest admissible `s` at `γ = (1 − δ)/(1 − 2s)`, by bisection on `(1/4, 1/2)`.
pub fn admissibility_flip(alpha: f64, delta: f64) -> f64 {
    let f = |s: f64| if admissible(alpha, s, (1.0 - delta) / (1.0 - 2.0 * s)) { 1.0 } else { -1.0 };
    bisect(f, 0.25 + 1e-9, 0.5 - 1e-9, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sstar_footnote_value() {
        assert!((sstar(2.0).unwrap() - 0.5 * (13f64.sqrt() - 3.0)).abs() < 1e-15);
        assert!(sstar(1.0).is_err());
    }

    #[test]
    fn numerology_high_branch() {
        let r = numerology(2.0, 0.5, 3.0).unwrap();
        assert_eq!(r.theta_star, 0.5);
        assert_eq!(r.c_exp, 4.0);
        assert!((r.beta - 2.25).abs() < 1e-15);
    }

    #[test]
    fn small_phase_scan_at_alpha_one() {
        let r = phase_bound_scan(1.0, 6).unwrap();
        assert_eq!(r.min_ratio, 2.0);
        assert_eq!(r.max_ratio, 2.0);
        assert!(r.pass);
    }
}
