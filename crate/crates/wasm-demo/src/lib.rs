//! Browser bindings: squeezing-correction explorer, calibrated model spectra
//! and a short Monte-Carlo intensity-difference measurement.

use std::f64::consts::{FRAC_PI_2, TAU};

use pdlopo::calibration::{calibrate, nominal_base, CalibrationTargets};
use pdlopo::detection::{
    bhd_phase_sum_ratio, direct_detect_difference, direct_expected_ratio, snl_calibrate_45deg, DetectionChain,
};
use pdlopo::dynamics::{output_psd, simulate_trajectory, JointMode, TrajectoryConfig};
use pdlopo::model::{correct_squeezing, duan_simon, variance_to_db, CorrectionInputs};
use pdlopo::rng::{substream, Purpose};
use pdlopo::spectral::{AnalyzerSettings, Span, WelchEstimator};
use wasm_bindgen::prelude::*;

fn js(e: pdlopo::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `[ideal, with_contrasts, duan_simon_ideal, duan_simon_contrasts]` for a
/// raw phase-sum level and a measured amplitude-difference level, in dB.
#[wasm_bindgen]
pub fn correct(raw_db: f64, rho: f64, eta: f64, c1: f64, c2: f64, s_minus_db: f64) -> Result<Vec<f64>, JsError> {
    let ideal = correct_squeezing(&CorrectionInputs::rho_only(raw_db, rho)).map_err(js)?;
    let full = correct_squeezing(&CorrectionInputs::with_contrasts(raw_db, rho, eta, c1, c2)).map_err(js)?;
    Ok(vec![
        ideal,
        full,
        duan_simon(s_minus_db, ideal).map_err(js)?,
        duan_simon(s_minus_db, full).map_err(js)?,
    ])
}

/// Calibrate to the two measured levels and sample `n` log-spaced points in
/// `[f_lo, f_hi]`. Flattened rows of
/// `[freq_hz, s_minus_true, s_minus_measured, s_plus_true, s_plus_raw]` (dB).
#[wasm_bindgen]
pub fn model_spectra(s_minus_db: f64, s_plus_raw_db: f64, f_lo: f64, f_hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if !(f_lo > 0.0 && f_hi > f_lo && n >= 2) {
        return Err(JsError::new("need 0 < f_lo < f_hi and n >= 2"));
    }
    let targets = CalibrationTargets {
        s_minus_measured_db: s_minus_db,
        s_plus_raw_db,
        ..CalibrationTargets::nominal()
    };
    let m = calibrate(&nominal_base(), &targets).map_err(js)?;
    let chain = m.chain;
    let elec = chain.electronic_noise_db;
    let mut out = Vec::with_capacity(5 * n);
    for k in 0..n {
        let f = f_lo * (f_hi / f_lo).powf(k as f64 / (n - 1) as f64);
        let sm = output_psd(JointMode::AmplitudeDifference, &m.params, f);
        let sp = output_psd(JointMode::PhaseSum, &m.params, f);
        let sv = output_psd(JointMode::PhaseDifference, &m.params, f);
        out.extend([
            f,
            variance_to_db(sm),
            variance_to_db(direct_expected_ratio(sm, chain.eta, elec)),
            variance_to_db(sp),
            variance_to_db(bhd_phase_sum_ratio(&chain, sp, sv)),
        ]);
    }
    Ok(out)
}

/// Phase-sum ratio seen by an ideal homodyne chain with LO phase `theta`
/// on both arms, against the true level; rows of `[theta, ratio_db]`.
#[wasm_bindgen]
pub fn quadrature_curve(s_plus_true_db: f64, rho: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let chain = DetectionChain::ideal(rho);
    let sp = 10f64.powf(s_plus_true_db / 10.0);
    // Anti-squeezed conjugate quadrature from the minimum-uncertainty bound.
    let anti = 1.0 / sp;
    let at_min = bhd_phase_sum_ratio(&chain, sp, 1.0);
    let at_max = bhd_phase_sum_ratio(&chain, anti, 1.0);
    Ok((0..n)
        .flat_map(|k| {
            let t = TAU * k as f64 / n as f64;
            let w = (t - FRAC_PI_2).cos().powi(2);
            [t, variance_to_db(w * at_min + (1.0 - w) * at_max)]
        })
        .collect())
}

/// Short Monte-Carlo run of the nominal calibrated OPO through direct
/// detection. Rows of `[freq_hz, signal_db, snl_45deg_db]` relative to SNL.
#[wasm_bindgen]
pub fn simulate_intensity_difference(seed: u64, trajectories: usize, rbw_hz: f64) -> Result<Vec<f64>, JsError> {
    let m = calibrate(&nominal_base(), &CalibrationTargets::nominal()).map_err(js)?;
    let p = m.params;
    let chain = m.chain;
    let settings = AnalyzerSettings::new(
        rbw_hz,
        f64::INFINITY,
        Span::Range {
            start_hz: 0.3e6,
            stop_hz: 3e6,
        },
        4,
    );
    settings.validate().map_err(js)?;
    let cfg = TrajectoryConfig::at_limit(&p, (settings.min_duration() / p.max_dt()).ceil() as usize);
    let fs = 1.0 / cfg.dt;
    let mut sig = WelchEstimator::new(fs, &settings).map_err(js)?;
    let mut snl = WelchEstimator::new(fs, &settings).map_err(js)?;
    for i in 0..trajectories.max(1) {
        let tr = simulate_trajectory(&p, &cfg, seed, i as u64, None).map_err(js)?;
        let (b1, b2) = tr.split_beams();
        let elec = chain.direct_electronic_variance(tr.mean_amplitude);
        let mut rng = substream(seed, i as u64, Purpose::Detection);
        let s = direct_detect_difference(&b1, &b2, chain.eta, elec, &mut rng).map_err(js)?;
        let r = snl_calibrate_45deg(&b1, &b2, chain.eta, elec, &mut rng).map_err(js)?;
        let scale = 1.0 / s.snl_level.sqrt();
        let norm = |x: &[f64]| x.iter().map(|v| v * scale).collect::<Vec<_>>();
        sig.accumulate(&norm(&s.samples)).map_err(js)?;
        snl.accumulate(&norm(&r.samples)).map_err(js)?;
    }
    let (a, b) = (sig.finish(), snl.finish());
    Ok(a.freq_hz
        .iter()
        .zip(a.psd.iter().zip(&b.psd))
        .flat_map(|(f, (x, y))| [*f, variance_to_db(*x), variance_to_db(*y)])
        .collect())
}
