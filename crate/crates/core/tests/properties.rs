use ncmad::channel::{sigma2_to_snr_db, snr_to_sigma2};
use ncmad::constellation::{canonical_phase, chordal_distance, gray_label};
use ncmad::linalg::{abs_eigen_fix, hermitize, log_sum_exp, normalize_log_weights, unvec_rows, vec_rows, CMat, CVec, C64};
use ncmad::metrics::{llr, total_variation, LLR_CLAMP};
use proptest::prelude::*;

fn cmat(rows: usize, cols: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), rows * cols)
        .prop_map(move |v| CMat::from_iterator(rows, cols, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn pmf(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..5.0f64, m).prop_map(|l| normalize_log_weights(&l))
}

proptest! {
    #[test]
    fn vec_rows_roundtrip(m in cmat(3, 4)) {
        let v = vec_rows(&m);
        prop_assert_eq!(v[4 + 2], m[(1, 2)]);
        prop_assert_eq!(unvec_rows(&v, 3, 4), m);
    }

    #[test]
    fn abs_eigen_fix_is_psd_and_keeps_psd_input(m in cmat(4, 4)) {
        let h = hermitize(&m).into_inner();
        let fixed = abs_eigen_fix(&h).unwrap().into_inner();
        let eig = fixed.clone().symmetric_eigen();
        let scale = fixed.norm().max(1.0);
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-9 * scale));
        let psd = &h * h.adjoint();
        let again = abs_eigen_fix(&psd).unwrap().into_inner();
        prop_assert!((again - &psd).norm() <= 1e-9 * psd.norm().max(1.0));
    }

    #[test]
    fn chordal_distance_ignores_phase(v in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4), w in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4), th in 0.0..std::f64::consts::TAU) {
        let x = CVec::from_iterator(4, v.into_iter().map(|(a, b)| C64::new(a, b)));
        let y = CVec::from_iterator(4, w.into_iter().map(|(a, b)| C64::new(a, b)));
        prop_assume!(x.norm() > 0.1 && y.norm() > 0.1);
        let (x, y) = (x.normalize(), y.normalize());
        let d = chordal_distance(&x, &y);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((chordal_distance(&(&x * C64::from_polar(1.0, th)), &y) - d).abs() < 1e-12);
        prop_assert!((chordal_distance(&canonical_phase(&x), &x)).abs() < 1e-7);
    }

    #[test]
    fn total_variation_is_a_bounded_metric(p in pmf(8), q in pmf(8), r in pmf(8)) {
        let d = total_variation(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - total_variation(&q, &p)).abs() < 1e-15);
        prop_assert!(d <= total_variation(&p, &r) + total_variation(&r, &q) + 1e-12);
    }

    #[test]
    fn llrs_are_finite_and_clamped(p in pmf(8)) {
        let labels: Vec<_> = (0..8).map(|i| gray_label(i, 3)).collect();
        for l in llr(&p, &labels) {
            prop_assert!(l.is_finite() && l.abs() <= LLR_CLAMP);
        }
    }

    #[test]
    fn log_sum_exp_matches_naive(x in prop::collection::vec(-30.0..30.0f64, 1..10)) {
        let naive = x.iter().map(|v| v.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(&x) - naive).abs() < 1e-10);
    }

    #[test]
    fn snr_conversion_roundtrips(snr in -10.0..30.0f64, xi in 0.1..5.0f64, t in 1usize..16) {
        prop_assert!((sigma2_to_snr_db(snr_to_sigma2(snr, xi, t), xi, t) - snr).abs() < 1e-9);
    }
}
