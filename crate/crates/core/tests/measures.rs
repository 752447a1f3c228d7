use fnls::measures::*;
use fnls::spectral_core::*;
use fnls::Field64;

const S: f64 = 0.45;

fn draws(s: f64, n: usize, seed: u64, count: usize) -> Vec<Field64> {
    let g = GaussianSampler::new(s, n, seed);
    par_map_indexed(count, |i| g.sample(i))
}

fn est(v: Vec<f64>) -> McEstimate {
    McEstimate::from_terms(&v).unwrap()
}

fn within(e: &McEstimate, want: f64, k: f64) -> bool {
    (e.mean - want).abs() <= k * e.stderr
}

#[test]
fn coefficient_moments() {
    let n = 8;
    let us = draws(S, n, 11, 100_000);
    // 34 simultaneous centering checks: Bonferroni level for the family, 3σ for the pooled sum
    let mut pooled = 0.0;
    for k in -(n as i64)..=n as i64 {
        let sq = est(us.iter().map(|u| u.get(k).norm_sqr()).collect());
        assert!(within(&sq, 1.0 / jb_pow(k, S), 3.0), "E|c_{k}|² = {sq:?}");
        let re = est(us.iter().map(|u| u.get(k).re).collect());
        let im = est(us.iter().map(|u| u.get(k).im).collect());
        assert!(within(&re, 0.0, 3.9) && within(&im, 0.0, 3.9), "E c_{k}");
        pooled += (re.mean / re.stderr).powi(2) + (im.mean / im.stderr).powi(2);
    }
    let dof = 2.0 * (2 * n + 1) as f64;
    assert!((pooled - dof).abs() <= 3.0 * (2.0 * dof).sqrt(), "chi² {pooled} on {dof}");
    let m = est(us.iter().map(mass).collect());
    assert!(within(&m, sigma_n(S, n), 3.0));
}

#[test]
fn nested_truncations_share_low_modes() {
    let big = GaussianSampler::new(S, 40, 5);
    let small = GaussianSampler::new(S, 12, 5);
    for i in 0..20 {
        let a: Field64 = big.sample(i);
        let b: Field64 = small.sample(i);
        assert_eq!(project(&a, 12).resized(12), b);
    }
}

#[test]
fn sigma_closed_values_and_asymptotics() {
    assert!((sigma_n(0.5, 1) - (1.0 + 2f64.sqrt())).abs() < 1e-14);
    assert_eq!(sigma_n(0.5, 0), 1.0);
    let r = sigma_n(0.5, 10_000) / (10_000f64).ln();
    assert!((r / 2.0 - 1.0).abs() < 0.15, "{r}");
    let plateau = |n: usize| sigma_n(0.3, n) * (n as f64).powf(2.0 * 0.3 - 1.0);
    let (a, b) = (plateau(1000), plateau(10_000));
    assert!((a / b - 1.0).abs() < 0.05, "{a} {b}");
}

#[test]
fn wick_mass_mean_and_variance() {
    let n = 16;
    let us = draws(S, n, 12, 100_000);
    let w: Vec<f64> = us.iter().map(|u| wick_mass(u, S, n)).collect();
    let mean = est(w.clone());
    assert!(within(&mean, 0.0, 3.0));
    let m = mean.mean;
    let var = est(w.iter().map(|x| (x - m) * (x - m)).collect());
    assert!(within(&var, wick_variance(S, n), 3.0), "{var:?} vs {}", wick_variance(S, n));
}

#[test]
fn wick_cauchy_rate() {
    let s = 0.45;
    let m = 8192;
    let us = draws(s, m, 13, 4000);
    let ns = [16usize, 32, 64, 128, 256];
    let norms: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let d: Vec<f64> = us.iter().map(|u| (wick_mass(u, s, n) - wick_mass(u, s, m)).powi(2)).collect();
            est(d).mean.sqrt()
        })
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let want = (1.0 - 4.0 * s) / 2.0;
    assert!((slope - want).abs() <= 0.15, "slope {slope} vs {want}");
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn weights_are_bounded_and_plateau() {
    let p = ModelParams::new(2.0, S, 3.0, 1).unwrap();
    let us = draws(S, 256, 14, 20_000);
    assert!(us.iter().all(|u| rho_weight(u, &p, 256) <= 1.0));
    for pow in [1.0, 2.0, 4.0] {
        let e: Vec<McEstimate> = [32usize, 64, 128, 256]
            .iter()
            .map(|&n| est(us.iter().map(|u| rho_weight(u, &p, n).powf(pow)).collect()))
            .collect();
        for w in e.windows(2) {
            assert!(w[1].z_against(&w[0]).abs() <= 3.0, "p = {pow}: {:?}", e);
        }
    }
}

#[test]
fn mc_expect_basics() {
    let g = GaussianSampler::new(S, 8, 15);
    let c = mc_expect::<f64, _, _>(|_| 2.5, &g, 100, |_| 1.0).unwrap();
    assert_eq!((c.mean, c.stderr, c.count), (2.5, 0.0, 100));
    let m = mc_expect::<f64, _, _>(mass, &g, 40_000, |_| 1.0).unwrap();
    assert!(within(&m, sigma_n(S, 8), 3.0));
    let small = mc_expect::<f64, _, _>(mass, &g, 10_000, |_| 1.0).unwrap();
    let r = small.stderr / m.stderr;
    assert!((r / 2.0 - 1.0).abs() < 0.3, "{r}");
    assert!(mc_expect::<f64, _, _>(mass, &g, 1, |_| 1.0).is_err());
}

#[test]
fn nonfinite_values_are_flagged() {
    let g = GaussianSampler::new(S, 4, 16);
    let ok = mc_expect::<f64, _, _>(|u: &Field64| if u.get(0).re > 4.0 { f64::NAN } else { 1.0 }, &g, 10_000, |_| 1.0).unwrap();
    assert!(ok.flagged <= 10 && ok.count + ok.flagged == 10_000);
    let bad = mc_expect::<f64, _, _>(|u: &Field64| if u.get(0).re > 1.0 { f64::NAN } else { 1.0 }, &g, 10_000, |_| 1.0);
    assert!(matches!(bad, Err(fnls::FnlsError::TooManyNonFinite { .. })));
}

#[test]
fn conjugation_preserves_the_law() {
    let n = 6;
    let us = draws(S, n, 17, 50_000);
    let vs: Vec<Field64> = us.iter().map(|u| u.conj_function()).collect();
    for k in [0i64, 1, -3, 6] {
        for f in [|z: num_complex::Complex<f64>| z.norm_sqr(), |z: num_complex::Complex<f64>| z.re * z.im, |z: num_complex::Complex<f64>| z.re.powi(2) - z.im.powi(2)] {
            let a = est(us.iter().map(|u| f(u.get(k))).collect());
            let b = est(vs.iter().map(|u| f(u.get(k))).collect());
            assert!(a.z_against(&b).abs() <= 3.0);
        }
    }
    let a = est(us.iter().map(|u| fl_norm(u, 0.0, 4.0)).collect());
    let b = est(vs.iter().map(|u| fl_norm(u, 0.0, 4.0)).collect());
    assert_eq!(a.mean, b.mean);
}

#[test]
fn reproducible_across_thread_counts() {
    let g = GaussianSampler::new(S, 16, 18);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| mc_expect::<f64, _, _>(|u| hs_norm_sq(u, 0.3), &g, 5000, |u| (-mass(u)).exp()).unwrap())
    };
    let (a, b) = (run(1), run(8));
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let x: Field64 = g.sample(77);
    assert_eq!(x, g.sample(77));
}
