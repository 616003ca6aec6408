use planar_stopping::densities::{disk_density, halfplane_density, strip_density, StripForm};
use planar_stopping::geometry::c;
use planar_stopping::montecarlo::ks_statistic;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disk_cdf_is_monotone_and_bounded(r in 0.0..0.95f64, th in -3.1..3.1f64, s0 in -3.1..3.1f64, ds in 0.0..1.0f64) {
        let d = disk_density(c(r * th.cos(), r * th.sin()), 1.0).unwrap();
        let (a, b) = (d.cdf(0, s0).unwrap(), d.cdf(0, s0 + ds).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!(b >= a - 1e-12);
        prop_assert!(d.value(0, s0).unwrap() > 0.0);
    }

    #[test]
    fn halfplane_cdf_is_symmetric_about_start(x in -5.0..5.0f64, y in 0.01..5.0f64, t in 0.0..10.0f64) {
        let d = halfplane_density(c(x, y)).unwrap();
        let lo = d.cdf(0, x - t).unwrap();
        let hi = d.cdf(0, x + t).unwrap();
        prop_assert!((lo + hi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn strip_masses_sum_to_one(a in 0.01..0.99f64) {
        let d = strip_density(a, StripForm::Conformal).unwrap();
        let total: f64 = (0..d.curves().len()).map(|i| d.mass(i).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ks_statistic_lies_between_half_step_and_one(xs in prop::collection::vec(0.0..1.0f64, 100..300)) {
        let n = xs.len() as f64;
        let d = ks_statistic(&xs, |x| x).unwrap();
        prop_assert!(d >= 0.5 / n - 1e-15 && d <= 1.0);
    }
}
