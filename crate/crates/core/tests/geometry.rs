use proptest::prelude::*;
use tail_lab::geometry::{appendix_coords, appendix_coords_inverse, half_disk, quarter_sphere, synthetic_phg, SyntheticPhg};
use tail_lab::indexsets::{min_exponent, pullback_blowup, sum, IndexSet};

/// Exponents `base, base + g1, base + g1 + g2, ...` with gaps of at least 1/2.
fn spaced_set() -> impl Strategy<Value = IndexSet> {
    (0.1..2.0f64, prop::collection::vec(0.5..1.5f64, 0..3)).prop_map(|(base, gaps)| {
        let mut exps = vec![base];
        for g in gaps {
            let next = exps[exps.len() - 1] + g;
            exps.push(next);
        }
        IndexSet::from_exponents(&exps, 10.0)
    })
}

/// Slope of `ln|u|` against `ln v` on a logarithmic grid `v ∈ [lo, hi]`.
fn loglog_slope(lo: f64, hi: f64, u: impl Fn(f64) -> f64) -> f64 {
    let m = 40;
    let pts: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v = (lo.ln() + (hi / lo).ln() * i as f64 / (m - 1) as f64).exp();
            (v.ln(), u(v).abs().ln())
        })
        .collect();
    let n = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn fixture(e: &IndexSet, f: &IndexSet, signs: &[f64]) -> SyntheticPhg {
    let coeffs: Vec<f64> = (0..e.len() * f.len()).map(|i| signs[i % signs.len()]).collect();
    synthetic_phg(e, f, &coeffs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn blown_up_fits_recover_the_pulled_back_sets(
        e in spaced_set(),
        f in spaced_set(),
        signs in prop::collection::vec(prop_oneof![0.5..2.0f64, -2.0..-0.5f64], 1..6),
        s in 0.5..2.0f64,
    ) {
        let u = fixture(&e, &f, &signs);
        let (h1, ff, h2) = pullback_blowup(&e, &f);
        prop_assert_eq!(&ff, &sum(&e, &f));

        let at_ff = loglog_slope(1e-6, 1e-4, |w| u.eval_blown_up(s, w));
        let expected = min_exponent(&ff).unwrap().0;
        prop_assert!((at_ff - expected).abs() <= 1e-2, "ff: {} vs {}", at_ff, expected);
        prop_assert!(ff.contains_exponent(at_ff, 1e-2));

        // Towards the side faces at fixed distance from the corner.
        let at_h1 = loglog_slope(1e-6, 1e-4, |sv| u.eval_blown_up(sv, 0.5));
        prop_assert!(h1.contains_exponent(at_h1, 1e-2), "H1: {}", at_h1);
        let at_h2 = loglog_slope(1e-6, 1e-4, |t| u.eval(0.5, 0.5 * t));
        prop_assert!(h2.contains_exponent(at_h2, 1e-2), "H2: {}", at_h2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn appendix_round_trip(total in (1e-3f64.ln()..1e6f64.ln()).prop_map(f64::exp), frac in 0.0..1.0f64) {
        let (t, r) = ((1.0 - frac) * total, frac * total);
        let (rho, x) = appendix_coords(t, r).unwrap();
        let (t2, r2) = appendix_coords_inverse(rho, x).unwrap();
        prop_assert!((t2 - t).abs() <= 1e-13 * total && (r2 - r).abs() <= 1e-13 * total);
    }

    #[test]
    fn charts_stay_in_their_images(t in -1e4..1e4f64, r in 1e-9..1e4f64) {
        let q = quarter_sphere(t, r);
        prop_assert!(((q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt() - 1.0).abs() <= 1e-14);
        let d = half_disk(t, r);
        prop_assert!(d[0].hypot(d[1]) <= 1.0 && d[1] >= 0.0);
    }
}
