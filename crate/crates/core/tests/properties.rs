use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use pdlopo::detection::{bhd_phase_sum_ratio, DetectionChain, QuadratureFit};
use pdlopo::dynamics::{output_psd, JointMode, ModeParams, OpoParams};
use pdlopo::model::{correct_squeezing, duan_simon, variance_to_db, CorrectionInputs};
use pdlopo::scenario::{Scenario, ScenarioName};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_then_correct_is_identity(true_db in -6.0f64..-0.05, rho in 0.1f64..0.9) {
        let inputs = CorrectionInputs::rho_only(0.0, rho);
        let raw = inputs.raw_for_true(true_db).unwrap();
        // The measured level always sits closer to the shot-noise limit.
        prop_assert!(raw > true_db && raw < 0.0);
        let back = correct_squeezing(&CorrectionInputs::rho_only(raw, rho)).unwrap();
        prop_assert!((back - true_db).abs() < 1e-9);
    }

    #[test]
    fn duan_simon_is_monotone(a in -8.0f64..3.0, b in -8.0f64..3.0, d in 0.01f64..2.0) {
        let base = duan_simon(a, b).unwrap();
        prop_assert!(duan_simon(a + d, b).unwrap() > base);
        prop_assert!(duan_simon(a, b + d).unwrap() > base);
    }

    #[test]
    fn squeezing_spectrum_bounded(depth in 0.0f64..1.0, eta in 0.5f64..1.0, f in 0.0f64..1e8) {
        let mut p = OpoParams::vacuum(1e7);
        p.eta_esc = eta;
        p.modes.amplitude_difference = ModeParams::from_depth(1e7, depth).unwrap();
        let s = output_psd(JointMode::AmplitudeDifference, &p, f);
        prop_assert!(s >= 1.0 - eta * depth - 1e-12 && s <= 1.0 + 1e-12);
    }

    #[test]
    fn ideal_homodyne_never_beats_true_level(s_plus in 0.3f64..1.0, rho in 0.1f64..0.9) {
        // With only a ρ-weighted phase-difference admixture the measured ratio lies
        // between the true level and the shot-noise limit.
        let r = bhd_phase_sum_ratio(&DetectionChain::ideal(rho), s_plus, 1.0);
        prop_assert!(r >= s_plus - 1e-12 && r <= 1.0 + 1e-12);
    }

    #[test]
    fn harmonic_fit_finds_minimum(theta0 in 0.0f64..std::f64::consts::TAU, depth in 0.05f64..0.9) {
        let theta: Vec<f64> = (0..720).map(|k| k as f64 * std::f64::consts::TAU / 720.0).collect();
        let power: Vec<f64> = theta.iter().map(|t| 1.0 - depth * (t - theta0).cos().powi(2) + 0.3 * depth * (t - theta0).sin().powi(2)).collect();
        let (t, v) = QuadratureFit::fit(&theta, &power).unwrap().argmin();
        let wrapped = (t - theta0).rem_euclid(std::f64::consts::PI);
        prop_assert!(wrapped.min(std::f64::consts::PI - wrapped) < 1e-6);
        prop_assert!((v - (1.0 - depth)).abs() < 1e-9);
    }

    #[test]
    fn scenario_toml_round_trips(seed in any::<u64>(), traj in 1usize..64, pick in 0usize..5) {
        let mut sc = Scenario::nominal(ScenarioName::ALL[pick]);
        sc.scenario.seed = seed;
        sc.scenario.trajectories = traj;
        let text = sc.to_toml_string().unwrap();
        prop_assert_eq!(Scenario::from_toml_str(&text).unwrap(), sc);
    }
}

#[test]
fn snl_reads_zero_db() {
    assert_abs_diff_eq!(variance_to_db(1.0), 0.0);
}
