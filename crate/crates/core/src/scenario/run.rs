use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use super::config::{CalibrationSection, Scenario, ScenarioName};
use super::output::{emit_zero_span_csv, write_csv, write_file, Outputs, RunReport};
use crate::calibration::{calibrate, CalibrationTargets};
use crate::detection::{
    bhd_phase_sum_ratio, bhd_snl_trace, bhd_sum_current, direct_detect_difference, direct_expected_ratio,
    quadrature_scan_trace, snl_calibrate_45deg, LocalOscillator, PhotocurrentTrace, QuadratureFit,
};
use crate::dynamics::{
    output_psd, run_ensemble, simulate_trajectory, JointMode, OutputTrace, Scheme, TrajectoryConfig,
};
use crate::error::{Error, Result};
use crate::model::{correct_squeezing, db_to_std_ratio, duan_simon, variance_to_db, CorrectionInputs};
use crate::rng::{substream, Purpose};
use crate::servo::{run_locked, LockReport, LockRunConfig, Pdll};
use crate::spectral::{relative_to_snl, welch_psd_complex, zero_span, NoiseSpectrum, Span, WelchEstimator};

/// Run `scenario`, writing artifacts into `out_dir`. `workers == 0` uses all
/// cores; results do not depend on it.
pub fn run(scenario: &Scenario, out_dir: &Path, workers: usize) -> Result<RunReport> {
    scenario.validate()?;
    let start = Instant::now();
    let mut out = Outputs::new(out_dir)?;
    let echo = out.path("scenario.toml");
    write_file(&echo, &scenario.to_toml_string()?)?;
    match scenario.scenario.name {
        ScenarioName::Beatnote => beatnote(scenario, &mut out, workers)?,
        ScenarioName::IntensityDiff => intensity_diff(scenario, &mut out, workers)?,
        ScenarioName::PhaseSumScan => phase_sum_scan(scenario, &mut out, workers)?,
        ScenarioName::EntanglementReport => entanglement_report(scenario, &mut out, workers)?,
        ScenarioName::Calibrate => calibrate_scenario(scenario, &mut out)?,
    }
    out.finish(scenario, start.elapsed().as_secs_f64())
}

fn db(x: f64) -> f64 {
    variance_to_db(x)
}

fn span_range(span: Span) -> (f64, f64) {
    match span {
        Span::Range { start_hz, stop_hz } => (start_hz, stop_hz),
        Span::Zero { center_hz } => (center_hz, center_hz),
    }
}

fn trajectory_config(sc: &Scenario) -> TrajectoryConfig {
    let dt = sc.opo.max_dt();
    TrajectoryConfig {
        dt,
        samples: (sc.scenario.duration_s / dt).round() as usize,
        warmup: (sc.servo.warmup_s / dt).round() as usize,
        scheme: Scheme::ExactOu,
    }
}

/// One trajectory with the phase-difference lock attached when engaged. An
/// unlocked phase difference wanders through every homodyne quadrature.
fn simulate(sc: &Scenario, index: usize) -> Result<OutputTrace> {
    let cfg = trajectory_config(sc);
    let seed = sc.scenario.seed;
    let pdll = &sc.servo.pdll;
    if pdll.engaged {
        pdll.check_stability(cfg.dt)?;
        let mut ctl = Pdll::new(*pdll, sc.opo.beat_hz, seed, index as u64);
        simulate_trajectory(&sc.opo, &cfg, seed, index as u64, Some(&mut ctl))
    } else {
        simulate_trajectory(&sc.opo, &cfg, seed, index as u64, None)
    }
}

fn scaled(trace: &PhotocurrentTrace, scale: f64) -> Vec<f64> {
    trace.samples.iter().map(|x| x * scale).collect()
}

fn merge_all(mut parts: Vec<Vec<WelchEstimator>>) -> Result<Vec<NoiseSpectrum>> {
    let mut acc = parts.remove(0);
    for p in &parts {
        for (a, b) in acc.iter_mut().zip(p) {
            a.merge(b);
        }
    }
    Ok(acc.iter().map(WelchEstimator::finish).collect())
}

fn rms(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n.max(1) as f64).sqrt()
}

fn beatnote(sc: &Scenario, out: &mut Outputs, workers: usize) -> Result<()> {
    let an = sc.analyzer.beatnote;
    let servo = &sc.servo;
    servo.pdll.check_stability(servo.lock_dt)?;
    let (lo, hi) = span_range(an.span);
    // Keep the envelope band at least twice the displayed span, and the
    // record no coarser than the frequency-error gate.
    let half_band = 2.0 * lo.abs().max(hi.abs());
    let every = ((1.0 / (servo.lock_dt * 2.0 * half_band)).floor() as usize)
        .min((servo.gate_s / servo.lock_dt).floor() as usize)
        .max(1);
    let fs_env = 1.0 / (servo.lock_dt * every as f64);
    let cfg = LockRunConfig {
        dt: servo.lock_dt,
        duration_s: sc.scenario.duration_s,
        gate_s: servo.gate_s,
        initial_phase: 0.0,
        record_every: every,
    };
    let seed = sc.scenario.seed;
    let runs: Vec<(LockReport, NoiseSpectrum)> = run_ensemble(sc.scenario.trajectories, workers, |i| {
        let (traj, report) = run_locked(&sc.opo, &servo.pdll, &cfg, seed, i as u64)?;
        let spec = welch_psd_complex(&traj.envelope, fs_env, &an)?;
        Ok((report, spec))
    })?;

    let n = runs.len() as f64;
    let freq = runs[0].1.freq_hz.clone();
    let mut psd = vec![0.0; freq.len()];
    for (_, s) in &runs {
        for (a, b) in psd.iter_mut().zip(&s.psd) {
            *a += b / n;
        }
    }
    let (peak_idx, peak) = psd
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let rel: Vec<f64> = psd.iter().map(|p| p / peak).collect();
    let p = out.path("beatnote.csv");
    write_csv(
        &p,
        &["freq_offset_hz", "power_rel_carrier", "db_rel_carrier"],
        freq.iter().zip(&rel).map(|(f, r)| [*f, *r, 10.0 * r.log10()]),
    )?;

    let df = freq.get(1).zip(freq.first()).map_or(0.0, |(b, a)| b - a);
    let mut width = 1usize;
    let mut k = peak_idx;
    while k > 0 && rel[k - 1] >= 0.5 {
        k -= 1;
        width += 1;
    }
    let mut k = peak_idx;
    while k + 1 < rel.len() && rel[k + 1] >= 0.5 {
        k += 1;
        width += 1;
    }
    let total: f64 = psd.iter().sum();
    let carrier: f64 = freq
        .iter()
        .zip(&psd)
        .filter(|(f, _)| f.abs() <= an.rbw_hz)
        .map(|(_, p)| p)
        .sum();

    let p = out.path("lock.csv");
    write_csv(
        &p,
        &[
            "trajectory",
            "locked",
            "residual_phase_rms_rad",
            "residual_freq_error_hz",
            "unlocked_freq_error_hz",
        ],
        runs.iter().enumerate().map(|(i, (r, _))| {
            [
                i as f64,
                if r.locked { 1.0 } else { 0.0 },
                r.residual_phase_rms,
                r.residual_freq_error,
                r.unlocked_freq_error.unwrap_or(f64::NAN),
            ]
        }),
    )?;

    let residual = rms(runs.iter().map(|(r, _)| r.residual_freq_error));
    // Without a resolved carrier the display holds only aliased wander noise
    // and a width would be meaningless.
    let fraction = carrier / total;
    let fwhm = if fraction >= 0.5 { width as f64 * df } else { f64::NAN };
    out.headline("beat_fwhm_hz", fwhm, "Hz", "beatnote.csv");
    out.headline("carrier_fraction", fraction, "1", "beatnote.csv");
    out.headline("lock_residual_hz", residual, "Hz", "lock.csv");
    out.headline(
        "lock_residual_phase_rad",
        rms(runs.iter().map(|(r, _)| r.residual_phase_rms)),
        "rad",
        "lock.csv",
    );
    out.headline(
        "locked_fraction",
        runs.iter().filter(|(r, _)| r.locked).count() as f64 / n,
        "1",
        "lock.csv",
    );
    if runs.iter().all(|(r, _)| r.unlocked_freq_error.is_some()) {
        let free = rms(runs.iter().filter_map(|(r, _)| r.unlocked_freq_error));
        out.headline("unlocked_freq_error_hz", free, "Hz", "lock.csv");
        out.headline("suppression_orders", (free / residual).log10(), "decades", "lock.csv");
    }
    Ok(())
}

fn intensity_diff(sc: &Scenario, out: &mut Outputs, workers: usize) -> Result<()> {
    let an = sc.analyzer.spectrum;
    let chain = sc.detection;
    let seed = sc.scenario.seed;
    let parts = run_ensemble(sc.scenario.trajectories, workers, |i| {
        let trace = simulate(sc, i)?;
        let fs = trace.sample_rate();
        let (b1, b2) = trace.split_beams();
        let elec = chain.direct_electronic_variance(trace.mean_amplitude);
        let mut rng = substream(seed, i as u64, Purpose::Detection);
        let signal = direct_detect_difference(&b1, &b2, chain.eta, elec, &mut rng)?;
        let snl = snl_calibrate_45deg(&b1, &b2, chain.eta, elec, &mut rng)?;
        let floor = direct_detect_difference(&b1, &b2, 0.0, elec, &mut rng)?;
        // Common scale: the expected shot-noise level of the signal trace.
        let scale = 1.0 / signal.snl_level.sqrt();
        let mut est = Vec::with_capacity(3);
        for t in [&signal, &snl, &floor] {
            let mut e = WelchEstimator::new(fs, &an)?;
            e.accumulate(&scaled(t, scale))?;
            est.push(e);
        }
        Ok(est)
    })?;
    let mut spectra = merge_all(parts)?;
    let floor = spectra.pop().expect("three spectra");
    let snl = spectra.pop().expect("three spectra");
    let mut signal = spectra.pop().expect("three spectra");
    let floor_level = floor.psd.iter().sum::<f64>() / floor.len().max(1) as f64;
    signal.floor_psd = Some(floor_level);
    let rel = relative_to_snl(&signal, &snl)?;
    let mut floor_rel = relative_to_snl(&floor, &snl)?;
    floor_rel.floor_psd = rel.floor_psd;

    out.spectrum("intensity_diff.csv", &rel)?;
    out.spectrum("intensity_diff_snl.csv", &snl)?;
    out.spectrum("intensity_diff_electronic.csv", &floor_rel)?;
    let model: Vec<f64> = rel
        .freq_hz
        .iter()
        .map(|&f| {
            direct_expected_ratio(
                output_psd(JointMode::AmplitudeDifference, &sc.opo, f),
                chain.eta,
                chain.electronic_noise_db,
            )
        })
        .collect();
    out.spectrum(
        "intensity_diff_model.csv",
        &NoiseSpectrum::new(rel.freq_hz.clone(), model),
    )?;

    let f = sc.scenario.analysis_hz;
    let level = rel.level_at(f, an.rbw_hz).unwrap_or(f64::NAN);
    out.headline("s_minus_db", db(level), "dB", "intensity_diff.csv");
    let snl_mean = snl.psd.iter().sum::<f64>() / snl.len().max(1) as f64;
    out.headline("snl_45deg_mean_db", db(snl_mean), "dB", "intensity_diff_snl.csv");
    let floor_mean = floor_rel.psd.iter().sum::<f64>() / floor_rel.len().max(1) as f64;
    out.headline(
        "electronic_floor_db",
        db(floor_mean),
        "dB",
        "intensity_diff_electronic.csv",
    );
    let expected = direct_expected_ratio(
        output_psd(JointMode::AmplitudeDifference, &sc.opo, f),
        chain.eta,
        chain.electronic_noise_db,
    );
    out.headline("model_s_minus_db", db(expected), "dB", "intensity_diff_model.csv");
    Ok(())
}

fn phase_sum_scan(sc: &Scenario, out: &mut Outputs, workers: usize) -> Result<()> {
    let an = sc.analyzer.zero_span;
    let center = span_range(an.span).0;
    let chain = sc.detection;
    let seed = sc.scenario.seed;
    let runs = run_ensemble(sc.scenario.trajectories, workers, |i| {
        let trace = simulate(sc, i)?;
        let scan = quadrature_scan_trace(
            &trace,
            &chain,
            &sc.servo.scan,
            &sc.servo.qll,
            center,
            &an,
            seed,
            i as u64,
        )?;
        let beta = chain.lo_amplitude(trace.mean_amplitude)?;
        let (lo1, lo2) = LocalOscillator::aom_pair(0.5 * trace.beat_hz, beta, 0.0, 0.0);
        let mut rng = substream(seed, i as u64, Purpose::Detection);
        // Skip past the draws used by the signal measurement.
        rng.set_word_pos(1 << 60);
        let snl = bhd_snl_trace(
            trace.len(),
            trace.dt,
            trace.mean_amplitude,
            &lo1,
            &lo2,
            &chain,
            &mut rng,
        )?;
        let zs = zero_span(&snl.normalized(), snl.sample_rate(), center, &an)?;
        Ok((scan, zs.power))
    })?;

    let n = runs.len() as f64;
    let len = runs[0].0.power_snl.len();
    let mut power = vec![0.0; len];
    let mut snl = vec![0.0; len];
    for (scan, s) in &runs {
        for k in 0..len {
            power[k] += scan.power_snl[k] / n;
            snl[k] += s[k] / n;
        }
    }
    // Measured SNL reference line.
    let snl_mean = snl.iter().sum::<f64>() / len as f64;
    let power: Vec<f64> = power.iter().map(|p| p / snl_mean).collect();
    let snl: Vec<f64> = snl.iter().map(|p| p / snl_mean).collect();
    let time = &runs[0].0.time_s;
    let theta = &runs[0].0.theta_rad;
    let p = out.path("phase_sum_scan.csv");
    emit_zero_span_csv(time, &power, theta, &p)?;
    let p = out.path("phase_sum_scan_snl.csv");
    emit_zero_span_csv(time, &snl, theta, &p)?;

    let fit = QuadratureFit::fit(theta, &power)?;
    let (theta_min, min) = fit.argmin();
    let p = out.path("phase_sum_scan_fit.csv");
    write_csv(
        &p,
        &["theta_rad", "fit_power_snl"],
        (0..=360).map(|k| {
            let t = TAU * k as f64 / 360.0;
            [t, fit.eval(t)]
        }),
    )?;
    out.headline("scan_theta_min_rad", theta_min, "rad", "phase_sum_scan.csv");
    out.headline("scan_min_db", db(min), "dB", "phase_sum_scan.csv");
    out.headline("scan_theta0_db", db(fit.eval(0.0)), "dB", "phase_sum_scan.csv");
    out.headline(
        "scan_floor_db",
        db(runs[0].0.floor_snl / snl_mean),
        "dB",
        "phase_sum_scan.csv",
    );
    Ok(())
}

fn entanglement_report(sc: &Scenario, out: &mut Outputs, workers: usize) -> Result<()> {
    let an = sc.analyzer.spectrum;
    let chain = sc.detection;
    let seed = sc.scenario.seed;
    let parts = run_ensemble(sc.scenario.trajectories, workers, |i| {
        let trace = simulate(sc, i)?;
        let fs = trace.sample_rate();
        let n = trace.len();
        let (b1, b2) = trace.split_beams();
        let alpha = trace.mean_amplitude;
        let mut rng = substream(seed, i as u64, Purpose::Detection);
        let mut rng_lo = substream(seed, i as u64, Purpose::LoPhase);

        let elec = chain.direct_electronic_variance(alpha);
        let direct = direct_detect_difference(&b1, &b2, chain.eta, elec, &mut rng)?;
        let direct_snl = snl_calibrate_45deg(&b1, &b2, chain.eta, elec, &mut rng)?;

        let beta = chain.lo_amplitude(alpha)?;
        let (lo1, lo2) = LocalOscillator::aom_pair(0.5 * trace.beat_hz, beta, 0.0, 0.0);
        let theta1 = sc.servo.qll.sample(n, trace.dt, &mut rng_lo);
        let theta2 = sc.servo.qll.sample(n, trace.dt, &mut rng_lo);
        let bhd = bhd_sum_current(
            &b1,
            &b2,
            &lo1.clone().with_phase_trace(theta1),
            &lo2.clone().with_phase_trace(theta2),
            &chain,
            &mut rng,
        )?;
        let bhd_snl = bhd_snl_trace(n, trace.dt, alpha, &lo1, &lo2, &chain, &mut rng)?;

        let mut est = Vec::with_capacity(4);
        for (t, level) in [
            (&direct, direct.snl_level),
            (&direct_snl, direct.snl_level),
            (&bhd, bhd.snl_level),
            (&bhd_snl, bhd.snl_level),
        ] {
            let mut e = WelchEstimator::new(fs, &an)?;
            e.accumulate(&scaled(t, 1.0 / level.sqrt()))?;
            est.push(e);
        }
        Ok(est)
    })?;
    let spectra = merge_all(parts)?;
    let minus = relative_to_snl(&spectra[0], &spectra[1])?;
    let plus = relative_to_snl(&spectra[2], &spectra[3])?;
    out.spectrum("entanglement_s_minus.csv", &minus)?;
    out.spectrum("entanglement_s_plus_raw.csv", &plus)?;

    let f = sc.scenario.analysis_hz;
    let s_minus = db(minus.level_at(f, an.rbw_hz).unwrap_or(f64::NAN));
    let raw = db(plus.level_at(f, an.rbw_hz).unwrap_or(f64::NAN));
    let rho_only = correct_squeezing(&CorrectionInputs::rho_only(raw, chain.rho)).unwrap_or(f64::NAN);
    let full = correct_squeezing(&CorrectionInputs::with_contrasts(
        raw, chain.rho, chain.eta, chain.c1, chain.c2,
    ))
    .unwrap_or(f64::NAN);
    let src_m = "entanglement_s_minus.csv";
    let src_p = "entanglement_s_plus_raw.csv";
    out.headline("s_minus_db", s_minus, "dB", src_m);
    out.headline("s_plus_raw_db", raw, "dB", src_p);
    out.headline("s_plus_corrected_rho_db", rho_only, "dB", src_p);
    out.headline("s_plus_corrected_full_db", full, "dB", src_p);
    out.headline("delta_minus", db_to_std_ratio(s_minus).unwrap_or(f64::NAN), "1", src_m);
    out.headline("delta_plus", db_to_std_ratio(rho_only).unwrap_or(f64::NAN), "1", src_p);
    out.headline(
        "duan_simon",
        duan_simon(s_minus, rho_only).unwrap_or(f64::NAN),
        "1",
        src_p,
    );
    out.headline(
        "duan_simon_full",
        duan_simon(s_minus, full).unwrap_or(f64::NAN),
        "1",
        src_p,
    );

    let true_minus = output_psd(JointMode::AmplitudeDifference, &sc.opo, f);
    let true_plus = output_psd(JointMode::PhaseSum, &sc.opo, f);
    let vminus = output_psd(JointMode::PhaseDifference, &sc.opo, f);
    out.headline(
        "model_s_minus_db",
        db(direct_expected_ratio(true_minus, chain.eta, chain.electronic_noise_db)),
        "dB",
        "model",
    );
    out.headline(
        "model_s_plus_raw_db",
        db(bhd_phase_sum_ratio(&chain, true_plus, vminus)),
        "dB",
        "model",
    );
    out.headline("model_s_plus_true_db", db(true_plus), "dB", "model");
    Ok(())
}

fn calibrate_scenario(sc: &Scenario, out: &mut Outputs) -> Result<()> {
    let c: CalibrationSection = sc
        .calibration
        .ok_or_else(|| Error::Validation("missing [calibration]".into()))?;
    let targets = CalibrationTargets {
        analysis_hz: sc.scenario.analysis_hz,
        s_minus_measured_db: c.s_minus_measured_db,
        s_plus_raw_db: c.s_plus_raw_db,
        eta_esc: c.eta_esc,
        k_minus: c.k_minus,
        phase_difference_rate: c.phase_difference_rate,
        chain: sc.detection,
    };
    let model = calibrate(&sc.opo, &targets)?;
    let p = &model.params;

    let mut calibrated = sc.clone();
    calibrated.opo = *p;
    calibrated.scenario.name = ScenarioName::EntanglementReport;
    calibrated.calibration = None;
    let mut default_len = Scenario::nominal(ScenarioName::EntanglementReport).scenario;
    default_len.seed = sc.scenario.seed;
    default_len.analysis_hz = sc.scenario.analysis_hz;
    calibrated.scenario = default_len;
    let path = out.path("calibrated.toml");
    write_file(&path, &calibrated.to_toml_string()?)?;

    let chain = model.chain;
    let freqs: Vec<f64> = (0..=200).map(|k| 1e5 * 10f64.powf(2.0 * k as f64 / 200.0)).collect();
    let path = out.path("calibration_spectra.csv");
    write_csv(
        &path,
        &[
            "freq_hz",
            "u_minus_snl",
            "v_plus_snl",
            "u_plus_snl",
            "v_minus_snl",
            "direct_measured_snl",
            "bhd_raw_snl",
        ],
        freqs.iter().map(|&f| {
            let m = JointMode::ALL.map(|mode| output_psd(mode, p, f));
            let um = output_psd(JointMode::AmplitudeDifference, p, f);
            let vp = output_psd(JointMode::PhaseSum, p, f);
            let vm = output_psd(JointMode::PhaseDifference, p, f);
            [
                f,
                m[JointMode::AmplitudeDifference.index()],
                m[JointMode::PhaseSum.index()],
                m[JointMode::AmplitudeSum.index()],
                m[JointMode::PhaseDifference.index()],
                direct_expected_ratio(um, chain.eta, chain.electronic_noise_db),
                bhd_phase_sum_ratio(&chain, vp, vm),
            ]
        }),
    )?;
    let src = "calibrated.toml";
    out.headline("cavity_rate_hz", p.gamma_c / TAU, "Hz", src);
    out.headline("phase_sum_depth", p.modes.phase_sum.depth(), "1", src);
    out.headline(
        "s_minus_true_db",
        model.predicted.s_minus_true_db,
        "dB",
        "calibration_spectra.csv",
    );
    out.headline(
        "s_minus_measured_db",
        model.predicted.s_minus_measured_db,
        "dB",
        "calibration_spectra.csv",
    );
    out.headline(
        "s_plus_true_db",
        model.predicted.s_plus_true_db,
        "dB",
        "calibration_spectra.csv",
    );
    out.headline(
        "s_plus_raw_db",
        model.predicted.s_plus_raw_db,
        "dB",
        "calibration_spectra.csv",
    );
    Ok(())
}
