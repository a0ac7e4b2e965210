use proptest::prelude::*;

use tsu_core::gaussian::{apply_loss, apply_phase_shift, lossy_state, photon_moments, seeded_tmss};
use tsu_core::metrology::{
    joint_noise_power, lambda_opt, lambda_opt_numeric, lambda_opt_unclamped, snri, SQL_OFFSET_DB,
};
use tsu_core::{InterferometerParams, Mode, SqlKind, WeightedMeasurement};

fn any_params() -> impl Strategy<Value = InterferometerParams> {
    (1.0..6.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..20.0f64)
        .prop_map(|(g, ep, ec, a)| InterferometerParams::new(g, ep, ec, a).unwrap())
}

proptest! {
    #[test]
    fn lossy_states_stay_physical(p in any_params(), dphi in -3.0..3.0f64) {
        let s = lossy_state(&p);
        prop_assert!(s.is_physical());
        prop_assert!(apply_phase_shift(&s, dphi).is_physical());
    }

    #[test]
    fn pure_states_saturate_uncertainty(g in 1.0..8.0f64, a in 0.0..5.0f64) {
        let s = seeded_tmss(&InterferometerParams::lossless(g, a).unwrap());
        prop_assert!(s.uncertainty_margin().abs() < 1e-8 * g);
        prop_assert!((s.cov().determinant() - 1.0).abs() < 1e-6 * g * g);
    }

    #[test]
    fn losses_compose(p in any_params(), e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64) {
        let s = seeded_tmss(&p);
        let twice = apply_loss(&apply_loss(&s, e1, e2).unwrap(), e2, e1).unwrap();
        let once = apply_loss(&s, e1 * e2, e1 * e2).unwrap();
        prop_assert!((twice.cov() - once.cov()).amax() < 1e-9 * p.cosh_2r());
        prop_assert!((twice.mean() - once.mean()).amax() < 1e-9 * (1.0 + p.alpha()));
    }

    #[test]
    fn optimum_is_a_minimum(p in any_params(), l in 0.0..=1.0f64) {
        let best = joint_noise_power(&p, WeightedMeasurement::new(lambda_opt(&p)).unwrap()).variance;
        let other = joint_noise_power(&p, WeightedMeasurement::new(l).unwrap()).variance;
        prop_assert!(best <= other * (1.0 + 1e-12));
        prop_assert!((lambda_opt(&p) - lambda_opt_numeric(&p)).abs() < 1e-7);
        prop_assert!(lambda_opt_unclamped(&p) >= 0.0);
    }

    #[test]
    fn sql_baselines_differ_by_3db(p in any_params(), l in 0.0..=1.0f64) {
        let m = WeightedMeasurement::new(l).unwrap();
        let d = snri(&p, m, SqlKind::Sql1) - snri(&p, m, SqlKind::Sql2);
        prop_assert!((d - SQL_OFFSET_DB).abs() < 1e-12);
    }

    #[test]
    fn loss_scales_photon_number(p in any_params()) {
        let pure = photon_moments(&seeded_tmss(&p), Mode::Probe).mean_n;
        let lossy = photon_moments(&lossy_state(&p), Mode::Probe).mean_n;
        prop_assert!((lossy - p.eta_p() * pure).abs() < 1e-9 * (1.0 + pure));
    }
}
