//! Weighted estimators shared by the Monte Carlo commands. All sums run in
//! index order through [`pairwise_sum`], so results do not depend on the
//! thread count.

use fnls::measures::pairwise_sum;

/// Self-normalized estimate `Σ w y / Σ w` with its delta-method standard error.
pub fn ratio(w: &[f64], y: &[f64]) -> (f64, f64) {
    let n = w.len() as f64;
    let wy: Vec<f64> = w.iter().zip(y).map(|(a, b)| a * b).collect();
    let sw = pairwise_sum(w);
    let r = pairwise_sum(&wy) / sw;
    let e: Vec<f64> = w.iter().zip(y).map(|(a, b)| (a * (b - r)).powi(2)).collect();
    let se = (pairwise_sum(&e) / (n * (n - 1.0))).sqrt() / (sw / n);
    (r, se)
}

/// `(1/p) log( Σ w f^p / Σ w )` from `log w` and `log f`, with a delta-method standard error.
pub fn log_lp_norm(log_w: &[f64], log_f: &[f64], p: f64) -> (f64, f64) {
    let n = log_w.len() as f64;
    let a: Vec<f64> = log_w.iter().zip(log_f).map(|(w, f)| w + p * f).collect();
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (ma, mb) = (max(&a), max(log_w));
    let x: Vec<f64> = a.iter().map(|v| (v - ma).exp()).collect();
    let y: Vec<f64> = log_w.iter().map(|v| (v - mb).exp()).collect();
    let (mx, my) = (pairwise_sum(&x) / n, pairwise_sum(&y) / n);
    let cov = |u: &[f64], mu: f64, v: &[f64], mv: f64| {
        let t: Vec<f64> = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).collect();
        pairwise_sum(&t) / (n - 1.0)
    };
    let var = cov(&x, mx, &x, mx) / (mx * mx) + cov(&y, my, &y, my) / (my * my) - 2.0 * cov(&x, mx, &y, my) / (mx * my);
    let value = (ma + mx.ln() - mb - my.ln()) / p;
    (value, (var.max(0.0) / n).sqrt() / p)
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let (mx, my) = (x.iter().sum::<f64>() / nf, y.iter().sum::<f64>() / nf);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Some(LineFit { slope, intercept, slope_stderr, r2, points: n })
}

/// `mean / stderr`, taken as 0 when both vanish.
pub fn z_score(mean: f64, stderr: f64) -> f64 {
    if stderr == 0.0 {
        if mean == 0.0 { 0.0 } else { f64::INFINITY.copysign(mean) }
    } else {
        mean / stderr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_with_unit_weights_is_the_sample_mean() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let (r, se) = ratio(&[1.0; 4], &y);
        assert_eq!(r, 3.0);
        let sd = ((4.0 + 1.0 + 0.0 + 9.0) / 3.0f64).sqrt();
        assert!((se - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_of_constants() {
        let lw = [0.0, -1.0, -2.0];
        assert_eq!(log_lp_norm(&lw, &[0.0; 3], 2.0), (0.0, 0.0));
        let (v, _) = log_lp_norm(&lw, &[0.7; 3], 3.0);
        assert!((v - 0.7).abs() < 1e-15);
        // against the direct formula
        let lf = [0.1f64, -0.4, 0.3];
        let w: Vec<f64> = lw.iter().map(|x: &f64| x.exp()).collect();
        let num: f64 = w.iter().zip(&lf).map(|(a, b)| a * (2.0 * b).exp()).sum();
        let want = (num / w.iter().sum::<f64>()).ln() / 2.0;
        assert!((log_lp_norm(&lw, &lf, 2.0).0 - want).abs() < 1e-14);
    }

    #[test]
    fn exact_line() {
        let f = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_eq!((f.slope, f.intercept, f.r2), (2.0, 1.0, 1.0));
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }
}
