use fnls::measures::GaussianSampler;
use fnls::spectral_core::oracle::{full_cubic_direct, nonres_direct, Exclusion};
use fnls::spectral_core::*;
use fnls::{Field32, Field64};
use num_complex::Complex;
use proptest::prelude::*;

fn rel(a: &Field64, b: &Field64) -> f64 {
    a.l2_distance(b) / mass(b).sqrt().max(1e-300)
}

fn draw(n: usize, seed: u64, i: u64) -> Field64 {
    GaussianSampler::new(0.4, n, seed).sample(i)
}

#[test]
fn fast_nonresonant_matches_direct_sum() {
    for i in 0..50u64 {
        let n = 1 + (i as usize % 16);
        let g = GridSpec::for_trunc(n);
        let (a, b, c) = (draw(n, 1, i), draw(n, 2, i), draw(n, 3, i));
        let fast = nonres_trilinear(&a, &b, &c, &g).unwrap();
        let slow = nonres_direct(&a, &b, &c, n, Exclusion::N2);
        assert!(rel(&fast, &slow) < 1e-12, "n = {n}: {}", rel(&fast, &slow));
    }
}

#[test]
fn exclusion_sets_agree_on_hyperplane() {
    for i in 0..10u64 {
        let n = 2 + i as usize;
        let (a, b, c) = (draw(n, 4, i), draw(n, 5, i), draw(n, 6, i));
        let x = nonres_direct(&a, &b, &c, n, Exclusion::N2);
        let y = nonres_direct(&a, &b, &c, n, Exclusion::N1);
        assert!(rel(&x, &y) < 1e-14);
    }
}

#[test]
fn renormalized_split_reproduces_full_cubic() {
    for i in 0..20u64 {
        let n = 1 + (i as usize % 16);
        let g = GridSpec::for_trunc(n);
        let u = draw(n, 7, i);
        let nn = nonres_trilinear(&u, &u, &u, &g).unwrap();
        let r = resonant_trilinear(&u, &u, &u);
        let m = mass(&u);
        let lhs = nn.add(&r).add(&u.scale(Complex::new(2.0 * m, 0.0)));
        let full = full_cubic_direct(&u, &u, &u, n);
        assert!(rel(&lhs, &full) < 1e-12);
        let fast_full = full_cubic(&u, &u, &u, &g).unwrap();
        assert!(rel(&fast_full, &full) < 1e-12);
    }
}

#[test]
fn padding_beyond_minimum_changes_nothing() {
    for n in [3usize, 8, 16] {
        let (a, b, c) = (draw(n, 8, 0), draw(n, 9, 0), draw(n, 10, 0));
        let g0 = GridSpec::new(n, 4 * n + 1).unwrap();
        let g1 = GridSpec::new(n, 8 * n + 2).unwrap();
        let x = nonres_trilinear(&a, &b, &c, &g0).unwrap();
        let y = nonres_trilinear(&a, &b, &c, &g1).unwrap();
        for k in -(n as i64)..=n as i64 {
            let d = (x.get(k) - y.get(k)).norm();
            assert!(d <= 1e-13 * y.get(k).norm().max(mass(&y).sqrt()), "n={n} k={k} d={d}");
        }
    }
}

#[test]
fn single_mode_has_no_nonresonant_part() {
    let g = GridSpec::for_trunc(5);
    let u = Field64::from_modes(5, &[(3, Complex::new(0.3, -1.2))]);
    let out = nonres_trilinear(&u, &u, &u, &g).unwrap();
    assert!(mass(&out) < 1e-28);
    let r = resonant_trilinear(&u, &u, &u);
    let a = Complex::new(0.3, -1.2);
    assert!((r.get(3) + a * a.norm_sqr()).norm() < 1e-15);
    assert_eq!(mass(&resonant_trilinear(&Field64::zeros(3), &Field64::zeros(3), &Field64::zeros(3))), 0.0);
}

#[test]
fn unsupported_input_is_a_config_error() {
    let g = GridSpec::for_trunc(2);
    let u = Field64::from_modes(4, &[(4, Complex::new(1.0, 0.0))]);
    assert!(nonres_trilinear(&u, &u, &u, &g).is_err());
    assert!(nonres_trilinear(&u, &u, &u, &GridSpec { n_trunc: 4, n_pad: 8 }).is_err());
}

#[test]
fn single_precision_path_tracks_double() {
    let n = 8;
    let g = GridSpec::for_trunc(n);
    let u = draw(n, 11, 0);
    let u32: Field32 = u.cast();
    let a = nonres_trilinear(&u, &u, &u, &g).unwrap();
    let b: Field64 = nonres_trilinear(&u32, &u32, &u32, &g).unwrap().cast();
    assert!(rel(&b, &a) < 1e-5);
}

#[test]
fn alpha_one_factorization_is_exact() {
    for n1 in -50i64..=50 {
        for n2 in -50i64..=50 {
            for n3 in -50i64..=50 {
                let n4 = n1 - n2 + n3;
                if n4.abs() <= 50 {
                    assert_eq!(n1 * n1 - n2 * n2 + n3 * n3 - n4 * n4, -2 * (n4 - n1) * (n4 - n3));
                }
            }
        }
    }
}

fn field_strategy(max_n: usize) -> impl Strategy<Value = Field64> {
    (0..=max_n).prop_flat_map(|n| {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2 * n + 1).prop_map(move |v| {
            Field64::from_coeffs(n, v.into_iter().map(|(a, b)| Complex::new(a, b)).collect()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn plancherel(f in field_strategy(12)) {
        prop_assert_eq!(mass(&f), hs_norm_sq(&f, 0.0));
    }

    #[test]
    fn projection_properties(f in field_strategy(12), m in 0usize..14, n in 0usize..14) {
        let pn = project(&f, n);
        prop_assert_eq!(project(&pn, n), pn.clone());
        prop_assert_eq!(project(&project(&f, m), n), project(&f, m.min(n)));
        prop_assert!(mass(&pn) <= mass(&f));
    }

    #[test]
    fn fl_norm_decreases_in_p(f in field_strategy(10), s in -1.0f64..1.0, p in 1.0f64..6.0, dp in 0.0f64..4.0) {
        let a = fl_norm(&f, s, p);
        let b = fl_norm(&f, s, p + dp);
        prop_assert!(b <= a * (1.0 + 1e-12) + 1e-300);
        prop_assert!(fl_norm(&f, s, f64::INFINITY) <= b * (1.0 + 1e-12) + 1e-300);
        prop_assert!((fl_norm(&f, s, 2.0) - hs_norm_sq(&f, s).sqrt()).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn trilinear_identity_random(f in field_strategy(9)) {
        let n = f.n_grid().max(1);
        let f = f.resized(n);
        let g = GridSpec::for_trunc(n);
        let nn = nonres_trilinear(&f, &f, &f, &g).unwrap();
        let r = resonant_trilinear(&f, &f, &f);
        let lhs = nn.add(&r).add(&f.scale(Complex::new(2.0 * mass(&f), 0.0)));
        let full = full_cubic_direct(&f, &f, &f, n);
        prop_assert!(lhs.l2_distance(&full) <= 1e-12 * (1.0 + mass(&full).sqrt()));
    }

    #[test]
    fn factorization_holds_for_large_frequencies(n1 in -100_000i64..100_000, n2 in -100_000i64..100_000, n3 in -100_000i64..100_000) {
        let n4 = n1 - n2 + n3;
        let lhs = (n1 as i128).pow(2) - (n2 as i128).pow(2) + (n3 as i128).pow(2) - (n4 as i128).pow(2);
        prop_assert_eq!(lhs, -2 * (n4 - n1) as i128 * (n4 - n3) as i128);
    }

    #[test]
    fn psi_bound_on_hyperplane(n1 in -300i64..300, n2 in -300i64..300, n3 in -300i64..300, s in 0.26f64..0.5) {
        let n4 = n1 - n2 + n3;
        let psi = psi_symbol(s, n1, n2, n3, n4).abs();
        // concavity of x^{2s} gives |⟨a⟩^{2s} − ⟨b⟩^{2s}| ≤ ⟨a − b⟩^{2s}, hence constant 2
        let bound = jb_pow(n1 - n2, s).min(jb_pow(n1 - n4, s));
        prop_assert!(psi <= 2.0 * bound + 1e-9);
    }
}
