mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use common::series_dd;
use tail_lab::specfun::{gamma, gauss_value, hyp2f1};

fn away_from_poles(z: Complex64) -> bool {
    let k = z.re.round().min(0.0);
    (z - k).norm() >= 0.1
}

fn disk(radius: f64) -> impl Strategy<Value = Complex64> {
    (0.0..radius, 0.0..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn param() -> impl Strategy<Value = Complex64> {
    disk(5.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gamma_recurrence(z in disk(30.0).prop_filter("poles", |z| away_from_poles(*z) && away_from_poles(*z + 1.0))) {
        let g1 = gamma(z + 1.0).unwrap();
        let g = gamma(z).unwrap();
        prop_assert!((g1 - z * g).norm() / g1.norm() <= 1e-11);
    }

    #[test]
    fn gamma_reflection(z in disk(30.0).prop_filter("poles", |z| away_from_poles(*z) && away_from_poles(1.0 - *z))) {
        let v = gamma(z).unwrap() * gamma(1.0 - z).unwrap() * (PI * z).sin();
        prop_assert!((v - PI).norm() / PI <= 1e-10, "{}", v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transform_matches_extended_series(a in param(), b in param(), c in param().prop_filter("c pole", |c| away_from_poles(*c))) {
        let oracle = series_dd(a, b, c, 0.6);
        let got = hyp2f1(a, b, c, 0.6).unwrap();
        prop_assert!((got - oracle).norm() <= 1e-9 * oracle.norm().max(1.0), "{} vs {}", got, oracle);
    }

    // c F(a,b,c) - c F(a+1,b,c) + b x F(a+1,b+1,c+1) = 0
    #[test]
    fn contiguous_relation(
        a in param(),
        b in param(),
        c in param().prop_filter("c pole", |c| away_from_poles(*c) && away_from_poles(*c + 1.0)),
        x in 0.0..0.95f64,
    ) {
        let f = hyp2f1(a, b, c, x).unwrap();
        let fa = hyp2f1(a + 1.0, b, c, x).unwrap();
        let fac = hyp2f1(a + 1.0, b + 1.0, c + 1.0, x).unwrap();
        let terms = [c * f, c * fa, b * x * fac];
        let scale = terms.iter().map(|t| t.norm()).fold(1.0, f64::max);
        prop_assert!((terms[0] - terms[1] + terms[2]).norm() <= 1e-9 * scale);
    }

    #[test]
    fn gauss_summation_chu_vandermonde(
        m in 0u32..10,
        b in param(),
        c in param().prop_filter("c", |c| away_from_poles(*c) && c.re > 0.0),
    ) {
        // F(-m, b, c; 1) = (c - b)_m / (c)_m
        let a = Complex64::new(-(m as f64), 0.0);
        prop_assume!((c - a - b).re > 0.0);
        let mut exact = Complex64::new(1.0, 0.0);
        for k in 0..m {
            exact *= (c - b + k as f64) / (c + k as f64);
        }
        let got = gauss_value(a, b, c).unwrap();
        prop_assert!((got - exact).norm() <= 1e-10 * exact.norm().max(1.0), "{} vs {}", got, exact);
    }
}

#[test]
fn gauss_summation_classical() {
    let half = Complex64::new(0.5, 0.0);
    let v = gauss_value(half, half, Complex64::new(2.0, 0.0)).unwrap();
    assert!((v.re - 4.0 / PI).abs() < 1e-10);
    // Direct summation of F(1/2, 1/2, 4; 1), terms ~ k^{-4}.
    let oracle = series_dd(half, half, Complex64::new(4.0, 0.0), 1.0);
    let v = gauss_value(half, half, Complex64::new(4.0, 0.0)).unwrap();
    assert!((v - oracle).norm() < 1e-10, "{v} vs {oracle}");
}
