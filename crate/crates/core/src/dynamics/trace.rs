use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use super::integrator::{Integrator, NoiseDraws, Scheme, TwoModeFluctuationState};
use super::{steady_state, JointMode, OpoParams};
use crate::error::{Error, Result};
use crate::rng::{gaussian, substream, Purpose};

/// Anything that turns the measured phase difference into a differential
/// phase-rate correction (rad/s).
pub trait PhaseController {
    fn actuate(&mut self, phi_diff: f64, t: f64, dt: f64) -> f64;
}

/// Time-aligned output-coupler fluctuations of the four joint modes.
///
/// Samples are SNL-normalized: vacuum gives unit variance per sample, so the
/// two-sided PSD of vacuum, in units of the sample rate, is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTrace {
    pub dt: f64,
    pub channels: [Vec<f64>; 4],
    /// Mean phase difference at each sample, rad.
    pub phi_diff: Vec<f64>,
    /// Mean amplitude per beam, √(photons/s).
    pub mean_amplitude: f64,
    /// Nominal twin-beam frequency difference, Hz.
    pub beat_hz: f64,
}

impl OutputTrace {
    pub fn len(&self) -> usize {
        self.phi_diff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_diff.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn channel(&self, mode: JointMode) -> &[f64] {
        &self.channels[mode.index()]
    }

    /// Individual beams from the joint modes. Beam 1 carries the mean phase
    /// difference relative to its local oscillator; beam 2 is the reference.
    pub fn split_beams(&self) -> (BeamTrace, BeamTrace) {
        let um = self.channel(JointMode::AmplitudeDifference);
        let up = self.channel(JointMode::AmplitudeSum);
        let vp = self.channel(JointMode::PhaseSum);
        let vm = self.channel(JointMode::PhaseDifference);
        let comb = |a: &[f64], b: &[f64], sign: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (x + sign * y) * FRAC_1_SQRT_2).collect()
        };
        let half_beat = 0.5 * self.beat_hz;
        let b1 = BeamTrace {
            dt: self.dt,
            amplitude: comb(up, um, 1.0),
            phase: comb(vp, vm, 1.0),
            phase_offset: Some(self.phi_diff.clone()),
            mean_amplitude: self.mean_amplitude,
            carrier_offset_hz: half_beat,
        };
        let b2 = BeamTrace {
            dt: self.dt,
            amplitude: comb(up, um, -1.0),
            phase: comb(vp, vm, -1.0),
            phase_offset: None,
            mean_amplitude: self.mean_amplitude,
            carrier_offset_hz: -half_beat,
        };
        (b1, b2)
    }
}

/// Quadrature fluctuations of one output beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamTrace {
    pub dt: f64,
    /// `δA_{j,0}` samples.
    pub amplitude: Vec<f64>,
    /// `δA_{j,π/2}` samples.
    pub phase: Vec<f64>,
    /// Mean-field phase relative to the nominal LO phase, rad.
    pub phase_offset: Option<Vec<f64>>,
    pub mean_amplitude: f64,
    /// Optical frequency offset from the fundamental, Hz.
    pub carrier_offset_hz: f64,
}

impl BeamTrace {
    /// Coherent beam: vacuum-level fluctuations around a bright mean field.
    pub fn coherent<R: Rng + ?Sized>(
        len: usize,
        dt: f64,
        mean_amplitude: f64,
        carrier_offset_hz: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            dt,
            amplitude: (0..len).map(|_| gaussian(rng)).collect(),
            phase: (0..len).map(|_| gaussian(rng)).collect(),
            phase_offset: None,
            mean_amplitude,
            carrier_offset_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    /// `δA_{θ+φ}` at sample `k`, where `φ` is the mean-field phase offset.
    #[inline]
    pub fn quadrature(&self, k: usize, theta: f64) -> f64 {
        let phi = self.phase_offset.as_ref().map_or(0.0, |p| p[k]);
        let (s, c) = (theta - phi).sin_cos();
        c * self.amplitude[k] + s * self.phase[k]
    }
}

/// Cavity input-output boundary: `out = √(2 η_esc q)·u − in`.
#[derive(Debug, Clone, Copy)]
pub struct OutputCoupler {
    gain: [f64; 4],
}

impl OutputCoupler {
    pub fn new(params: &OpoParams, dt: f64) -> Self {
        Self {
            gain: JointMode::ALL.map(|m| (2.0 * params.eta_esc * params.modes.get(m).noise * dt).sqrt()),
        }
    }

    /// Output sample of `mode` over one step, using the interval-averaged
    /// intracavity value and the escape draw of that interval.
    #[inline]
    pub fn sample(
        &self,
        mode: JointMode,
        prev: &TwoModeFluctuationState,
        next: &TwoModeFluctuationState,
        draws: &NoiseDraws,
    ) -> f64 {
        let i = mode.index();
        self.gain[i] * 0.5 * (prev.mode(mode) + next.mode(mode)) - draws.escape[i]
    }
}

/// Build an output trace from an explicit stream of `(before, after, draws)`
/// step records.
pub fn output_field<I>(records: I, params: &OpoParams, dt: f64) -> Result<OutputTrace>
where
    I: IntoIterator<Item = (TwoModeFluctuationState, TwoModeFluctuationState, NoiseDraws)>,
{
    let coupler = OutputCoupler::new(params, dt);
    let mut channels: [Vec<f64>; 4] = Default::default();
    let mut phi = Vec::new();
    for (prev, next, draws) in records {
        for m in JointMode::ALL {
            channels[m.index()].push(coupler.sample(m, &prev, &next, &draws));
        }
        phi.push(next.phi_diff);
    }
    Ok(OutputTrace {
        dt,
        channels,
        phi_diff: phi,
        mean_amplitude: steady_state(params)?.amplitude(),
        beat_hz: params.beat_hz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    /// Recorded samples.
    pub samples: usize,
    /// Discarded leading steps (servo acquisition).
    pub warmup: usize,
    pub scheme: Scheme,
}

impl TrajectoryConfig {
    /// Step at the stability limit, `samples` recorded steps, no warm-up.
    pub fn at_limit(params: &OpoParams, samples: usize) -> Self {
        Self {
            dt: params.max_dt(),
            samples,
            warmup: 0,
            scheme: Scheme::ExactOu,
        }
    }
}

/// Colored Gaussian noise with two-sided PSD `psd(f)` (SNL units) by
/// spectral shaping of white noise over the whole record.
pub fn synthesize_colored_noise<R, F>(n: usize, dt: f64, psd: F, rng: &mut R) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    synthesize_colored_pair(n, dt, psd, rng).0
}

/// Two independent realizations from one transform pair: a real-valued
/// filter acts on the real and imaginary parts separately.
pub fn synthesize_colored_pair<R, F>(n: usize, dt: f64, psd: F, rng: &mut R) -> (Vec<f64>, Vec<f64>)
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    // Shape a power-of-two record and keep the first n samples.
    let m = n.next_power_of_two();
    let mut buf: Vec<Complex64> = (0..m).map(|_| Complex64::new(gaussian(rng), gaussian(rng))).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let df = 1.0 / (m as f64 * dt);
    for (k, z) in buf.iter_mut().enumerate() {
        let bin = if k <= m / 2 { k } else { m - k };
        *z *= psd(bin as f64 * df).max(0.0).sqrt();
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.truncate(n);
    (
        buf.iter().map(|z| z.re * scale).collect(),
        buf.iter().map(|z| z.im * scale).collect(),
    )
}

/// One trajectory of the oscillator, optionally under phase-difference
/// control. Random draws come from the `(seed, index)` substreams, so the
/// mode channels do not depend on whether a controller is attached.
pub fn simulate_trajectory(
    params: &OpoParams,
    cfg: &TrajectoryConfig,
    seed: u64,
    index: u64,
    mut controller: Option<&mut dyn PhaseController>,
) -> Result<OutputTrace> {
    params.validate()?;
    let integ = Integrator::new(params, cfg.dt, cfg.scheme)?;
    let coupler = OutputCoupler::new(params, cfg.dt);
    let mut rng_modes = substream(seed, index, Purpose::Modes);
    let mut rng_phase = substream(seed, index, Purpose::Phase);

    let mut state = TwoModeFluctuationState::default();
    for m in JointMode::ALL {
        let sd = params.modes.get(m).stationary_variance().sqrt();
        let v = sd * gaussian(&mut rng_modes);
        match m {
            JointMode::AmplitudeDifference => state.u_minus = v,
            JointMode::PhaseSum => state.v_plus = v,
            JointMode::AmplitudeSum => state.u_plus = v,
            JointMode::PhaseDifference => state.v_minus = v,
        }
    }
    state.freq_wander_hz = params.tech_drift_span_hz * gaussian(&mut rng_phase);

    let n = cfg.samples;
    let mut channels: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut phi = Vec::with_capacity(n);
    let mut draws = NoiseDraws::default();
    for k in 0..cfg.warmup + n {
        draws.draw_modes(&mut rng_modes);
        draws.draw_phase(&mut rng_phase);
        let actuation = match controller.as_mut() {
            Some(c) => c.actuate(state.phi_diff, state.t, cfg.dt),
            None => 0.0,
        };
        let prev = state;
        integ.advance_modes(&mut state, &draws, actuation);
        integ.advance_phase(&mut state, &draws, actuation);
        if k >= cfg.warmup {
            for m in JointMode::ALL {
                channels[m.index()].push(coupler.sample(m, &prev, &state, &draws));
            }
            phi.push(state.phi_diff);
        }
        if !state.phi_diff.is_finite() || !state.u_minus.is_finite() {
            return Err(Error::Domain(format!("trajectory {index} diverged at step {k}")));
        }
    }

    if !params.pump_noise.is_off() {
        let mut rng_tech = substream(seed, index, Purpose::Technical);
        let noise = params.pump_noise;
        let (amplitude, phase) = synthesize_colored_pair(n, cfg.dt, |f| noise.psd(f), &mut rng_tech);
        for m in JointMode::ALL {
            let c = m.pump_coupling(params);
            if c == 0.0 {
                continue;
            }
            let src = if m == JointMode::PhaseSum { &phase } else { &amplitude };
            for (y, x) in channels[m.index()].iter_mut().zip(src) {
                *y += c * x;
            }
        }
    }

    Ok(OutputTrace {
        dt: cfg.dt,
        channels,
        phi_diff: phi,
        mean_amplitude: steady_state(params)?.amplitude(),
        beat_hz: params.beat_hz,
    })
}

/// Map `job` over `0..count`, in parallel when enabled, preserving order.
/// `workers == 0` uses the machine default.
pub fn run_ensemble<T, F>(count: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers != 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            return pool.install(|| (0..count).into_par_iter().map(&job).collect());
        }
    }
    let _ = workers;
    (0..count).map(job).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ModeParams;

    #[test]
    fn controller_does_not_touch_mode_channels() {
        struct Kick;
        impl PhaseController for Kick {
            fn actuate(&mut self, phi: f64, _t: f64, _dt: f64) -> f64 {
                -1e3 * phi
            }
        }
        let mut p = OpoParams::vacuum(1e7);
        p.d_quantum = 10.0;
        let cfg = TrajectoryConfig::at_limit(&p, 2000);
        let free = simulate_trajectory(&p, &cfg, 1, 0, None).unwrap();
        let mut k = Kick;
        let locked = simulate_trajectory(&p, &cfg, 1, 0, Some(&mut k)).unwrap();
        assert_eq!(free.channels, locked.channels);
        assert_ne!(free.phi_diff, locked.phi_diff);

        // With back-action the amplitude difference does respond.
        p.backaction = 1.0;
        let mut k = Kick;
        let coupled = simulate_trajectory(&p, &cfg, 1, 0, Some(&mut k)).unwrap();
        assert_ne!(
            free.channel(JointMode::AmplitudeDifference),
            coupled.channel(JointMode::AmplitudeDifference)
        );
    }

    #[test]
    fn split_beams_inverts_joint_modes() {
        let mut p = OpoParams::vacuum(1e7);
        p.modes.amplitude_difference = ModeParams::from_depth(1e7, 0.9).unwrap();
        let t = simulate_trajectory(&p, &TrajectoryConfig::at_limit(&p, 100), 2, 3, None).unwrap();
        let (b1, b2) = t.split_beams();
        for k in 0..100 {
            let um = (b1.amplitude[k] - b2.amplitude[k]) * FRAC_1_SQRT_2;
            let vp = (b1.phase[k] + b2.phase[k]) * FRAC_1_SQRT_2;
            assert!((um - t.channel(JointMode::AmplitudeDifference)[k]).abs() < 1e-12);
            assert!((vp - t.channel(JointMode::PhaseSum)[k]).abs() < 1e-12);
        }
        assert!(b1.carrier_offset_hz > 0.0 && b2.carrier_offset_hz < 0.0);
    }

    #[test]
    fn colored_noise_has_requested_variance() {
        let mut rng = substream(9, 0, Purpose::Technical);
        let dt = 1e-3;
        // Flat PSD of 4 below 100 Hz out of a 500 Hz Nyquist band.
        let x = synthesize_colored_noise(1 << 16, dt, |f| if f < 100.0 { 4.0 } else { 0.0 }, &mut rng);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 0.8).abs() < 0.03, "{var}");
    }

    #[test]
    fn ensemble_order_is_stable() {
        let a = run_ensemble(17, 1, |i| Ok(i * i)).unwrap();
        let b = run_ensemble(17, 3, |i| Ok(i * i)).unwrap();
        assert_eq!(a, b);
        let e: Result<Vec<usize>> = run_ensemble(4, 2, |i| {
            if i == 2 {
                Err(Error::Domain("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(e.is_err());
    }
}
