//! Classical control loops: the phase-difference lock (PDLL) and simple
//! models of the cavity and LO-quadrature locks.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Integrator, NoiseDraws, OpoParams, PhaseController, TwoModeFluctuationState};
use crate::error::{Error, Result};
use crate::rng::{gaussian, substream, Purpose, StreamRng};

/// Wrap into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Phase error between the beat note `phi_diff + 2π f_beat t` and the
/// reference `2π f_ref t`. The carrier terms are subtracted before they are
/// multiplied by `t` to keep precision at long times.
pub fn phase_detector(phi_diff: f64, t: f64, beat_hz: f64, reference_hz: f64) -> f64 {
    wrap_phase(phi_diff + TAU * (beat_hz - reference_hz) * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoLoop {
    pub reference_hz: f64,
    /// Proportional gain, rad/s per rad.
    pub kp: f64,
    /// Integral gain, rad/s² per rad.
    pub ki: f64,
    #[serde(default)]
    pub integrator: f64,
    /// Largest |actuation|, rad/s.
    pub actuator_limit: f64,
    pub engaged: bool,
    /// White noise added to the detected error, rad RMS per sample.
    #[serde(default)]
    pub loop_noise_rad: f64,
}

impl ServoLoop {
    /// PI loop with ~100 kHz unity-gain bandwidth and a critically damped
    /// integrator corner.
    pub fn pdll_default() -> Self {
        let kp = TAU * 1e5;
        Self {
            reference_hz: 161.827_324e6,
            kp,
            ki: kp * kp / 4.0,
            integrator: 0.0,
            actuator_limit: TAU * 5e6,
            engaged: true,
            loop_noise_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp >= 0.0 && self.ki >= 0.0 && self.kp.is_finite() && self.ki.is_finite()) {
            return Err(Error::Validation(format!(
                "servo gains must be finite and >= 0 (kp={}, ki={})",
                self.kp, self.ki
            )));
        }
        if !(self.actuator_limit > 0.0) {
            return Err(Error::Validation("actuator_limit must be > 0".into()));
        }
        if !(self.loop_noise_rad >= 0.0) {
            return Err(Error::Validation("loop_noise_rad must be >= 0".into()));
        }
        if !self.reference_hz.is_finite() {
            return Err(Error::Validation("reference_hz must be finite".into()));
        }
        Ok(())
    }

    /// Jury test of the sampled PI loop acting on a pure integrator.
    pub fn check_stability(&self, dt: f64) -> Result<()> {
        let a = self.kp * dt;
        let b = self.ki * dt * dt;
        let reason = if a >= 2.0 {
            Some(format!("kp·dt = {a} must stay below 2"))
        } else if 2.0 * a + b >= 4.0 {
            Some(format!("2·kp·dt + ki·dt² = {} must stay below 4", 2.0 * a + b))
        } else {
            None
        };
        match reason {
            Some(reason) if self.engaged => Err(Error::ServoUnstable {
                kp: self.kp,
                ki: self.ki,
                reason,
            }),
            _ => Ok(()),
        }
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
    }
}

/// One PI update; returns the phase-rate correction in rad/s.
pub fn loop_step(servo: &mut ServoLoop, error: f64, dt: f64) -> f64 {
    if !servo.engaged {
        return 0.0;
    }
    let trial = servo.integrator + error * dt;
    let raw = -(servo.kp * error + servo.ki * trial);
    let limit = servo.actuator_limit;
    if raw.abs() > limit {
        // Anti-windup: hold the integrator while saturated.
        let held = -(servo.kp * error + servo.ki * servo.integrator);
        return held.clamp(-limit, limit);
    }
    servo.integrator = trial;
    raw
}

/// PDLL wired to the oscillator's beat note.
pub struct Pdll {
    pub servo: ServoLoop,
    pub beat_hz: f64,
    noise: Option<StreamRng>,
}

impl Pdll {
    pub fn new(servo: ServoLoop, beat_hz: f64, seed: u64, trajectory: u64) -> Self {
        let noise = (servo.loop_noise_rad > 0.0).then(|| substream(seed, trajectory, Purpose::Servo));
        Self { servo, beat_hz, noise }
    }
}

impl PhaseController for Pdll {
    fn actuate(&mut self, phi_diff: f64, t: f64, dt: f64) -> f64 {
        let mut e = phase_detector(phi_diff, t, self.beat_hz, self.servo.reference_hz);
        if let Some(rng) = self.noise.as_mut() {
            e += self.servo.loop_noise_rad * gaussian(rng);
        }
        loop_step(&mut self.servo, e, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockReport {
    pub locked: bool,
    /// RMS wrapped phase error over the second half of the record, rad.
    pub residual_phase_rms: f64,
    /// RMS of the gated frequency error, Hz.
    pub residual_freq_error: f64,
    /// Same estimate for the free-running oscillator with identical noise.
    pub unlocked_freq_error: Option<f64>,
    pub suppression_orders: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockedTrajectory {
    /// Spacing of the recorded samples, s.
    pub dt: f64,
    /// Unwrapped beat-note phase relative to the reference, rad.
    pub phase_error: Vec<f64>,
    pub actuation: Vec<f64>,
    /// Beat-note complex envelope `exp(iφ)` averaged over each record
    /// interval.
    pub envelope: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockRunConfig {
    pub dt: f64,
    pub duration_s: f64,
    /// Gate time of the frequency-error estimate, s.
    pub gate_s: f64,
    /// Initial phase offset of the beat note, rad.
    #[serde(default)]
    pub initial_phase: f64,
    /// Keep every n-th step.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl Default for LockRunConfig {
    fn default() -> Self {
        Self {
            dt: 1e-6,
            duration_s: 0.5,
            gate_s: 10e-3,
            initial_phase: 0.0,
            record_every: 1,
        }
    }
}

/// RMS of `(φ(t+τ) − φ(t)) / (2πτ)` over non-overlapping gates.
pub fn gated_frequency_error(phase: &[f64], dt: f64, gate_s: f64) -> f64 {
    let g = ((gate_s / dt).round() as usize).max(1);
    let diffs: Vec<f64> = phase
        .iter()
        .step_by(g)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| (w[1] - w[0]) / (TAU * g as f64 * dt))
        .collect();
    if diffs.is_empty() {
        return 0.0;
    }
    (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt()
}

fn simulate_phase(
    params: &OpoParams,
    servo: &ServoLoop,
    cfg: &LockRunConfig,
    seed: u64,
    trajectory: u64,
) -> Result<LockedTrajectory> {
    let integ = Integrator::phase_only(params, cfg.dt)?;
    let mut rng = substream(seed, trajectory, Purpose::Phase);
    let mut pdll = Pdll::new(*servo, params.beat_hz, seed, trajectory);
    let n = (cfg.duration_s / cfg.dt).round() as usize;
    let every = cfg.record_every.max(1);
    let mut state = TwoModeFluctuationState {
        phi_diff: cfg.initial_phase,
        ..Default::default()
    };
    state.freq_wander_hz = params.tech_drift_span_hz * gaussian(&mut rng);
    let offset = TAU * (params.beat_hz - servo.reference_hz);
    let mut out = LockedTrajectory {
        dt: cfg.dt * every as f64,
        phase_error: Vec::with_capacity(n / every),
        actuation: Vec::with_capacity(n / every),
        envelope: Vec::with_capacity(n / every),
    };
    let mut draws = NoiseDraws::default();
    let mut block = Complex64::default();
    for k in 0..n {
        draws.draw_phase(&mut rng);
        let act = pdll.actuate(state.phi_diff, state.t, cfg.dt);
        integ.advance_phase(&mut state, &draws, act);
        let e = state.phi_diff + offset * state.t;
        if !e.is_finite() || !pdll.servo.integrator.is_finite() {
            return Err(Error::ServoUnstable {
                kp: servo.kp,
                ki: servo.ki,
                reason: "phase error diverged".into(),
            });
        }
        block += Complex64::from_polar(1.0, e);
        if (k + 1) % every == 0 {
            out.phase_error.push(e);
            out.actuation.push(act);
            out.envelope.push(block / every as f64);
            block = Complex64::default();
        }
    }
    Ok(out)
}

/// Run the PDLL on the slow phase variables only. When the loop is engaged
/// the same noise realization is also run free to quantify suppression.
pub fn run_locked(
    params: &OpoParams,
    servo: &ServoLoop,
    cfg: &LockRunConfig,
    seed: u64,
    trajectory: u64,
) -> Result<(LockedTrajectory, LockReport)> {
    params.validate()?;
    servo.validate()?;
    if !(cfg.dt > 0.0 && cfg.duration_s > 0.0 && cfg.gate_s > 0.0) {
        return Err(Error::Validation("lock run needs dt, duration_s and gate_s > 0".into()));
    }
    servo.check_stability(cfg.dt)?;
    let traj = simulate_phase(params, servo, cfg, seed, trajectory)?;
    let half = &traj.phase_error[traj.phase_error.len() / 2..];
    let wrapped_rms = if half.is_empty() {
        0.0
    } else {
        (half.iter().map(|e| wrap_phase(*e).powi(2)).sum::<f64>() / half.len() as f64).sqrt()
    };
    let freq = gated_frequency_error(half, traj.dt, cfg.gate_s);
    let unlocked = if servo.engaged {
        let mut free = *servo;
        free.engaged = false;
        let f = simulate_phase(params, &free, cfg, seed, trajectory)?;
        Some(gated_frequency_error(
            &f.phase_error[f.phase_error.len() / 2..],
            f.dt,
            cfg.gate_s,
        ))
    } else {
        None
    };
    // A cycle slip shows up as a 2π jump between the ends of the record.
    let slipped = half.first().zip(half.last()).is_some_and(|(a, b)| (b - a).abs() > PI);
    let report = LockReport {
        locked: servo.engaged && !slipped && wrapped_rms < 0.5,
        residual_phase_rms: wrapped_rms,
        residual_freq_error: freq,
        unlocked_freq_error: unlocked,
        suppression_orders: unlocked.filter(|u| *u > 0.0 && freq > 0.0).map(|u| (u / freq).log10()),
    };
    Ok((traj, report))
}

/// LO phase under the quadrature lock, or swept for a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoPhaseProcess {
    /// Locked at `target` with OU jitter of the given RMS and correlation time.
    Hold {
        target: f64,
        jitter_rms: f64,
        correlation_s: f64,
    },
    /// Linear sweep `start → stop` reached at `turn_s`, then back.
    Ramp { start: f64, stop: f64, turn_s: f64 },
}

/// Quadrature-lock hold with a 1 ms jitter correlation time, i.e. a lock of
/// roughly kHz bandwidth. Faster jitter would mix the strong low-frequency
/// amplitude noise into the held quadrature at MHz analysis frequencies.
pub fn qll_hold(theta_target: f64, jitter_rms: f64) -> Result<LoPhaseProcess> {
    if !(jitter_rms >= 0.0) {
        return Err(Error::Validation("jitter_rms must be >= 0".into()));
    }
    Ok(LoPhaseProcess::Hold {
        target: theta_target,
        jitter_rms,
        correlation_s: 1e-3,
    })
}

impl LoPhaseProcess {
    pub fn scan(start: f64, stop: f64, turn_s: f64) -> Self {
        LoPhaseProcess::Ramp { start, stop, turn_s }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LoPhaseProcess::Hold {
                jitter_rms,
                correlation_s,
                ..
            } if !(jitter_rms >= 0.0 && correlation_s > 0.0) => Err(Error::Validation(
                "hold needs jitter_rms >= 0 and correlation_s > 0".into(),
            )),
            LoPhaseProcess::Ramp { turn_s, .. } if !(turn_s > 0.0) => {
                Err(Error::Validation("ramp turn_s must be > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Deterministic part at time `t`.
    pub fn nominal(&self, t: f64) -> f64 {
        match *self {
            LoPhaseProcess::Hold { target, .. } => target,
            LoPhaseProcess::Ramp { start, stop, turn_s } => {
                let x = if t <= turn_s {
                    t / turn_s
                } else {
                    (2.0 - t / turn_s).max(0.0)
                };
                start + (stop - start) * x
            }
        }
    }

    pub fn sample(&self, n: usize, dt: f64, rng: &mut StreamRng) -> Vec<f64> {
        match *self {
            LoPhaseProcess::Hold {
                target,
                jitter_rms,
                correlation_s,
            } => {
                if jitter_rms == 0.0 {
                    return vec![target; n];
                }
                let a = (-dt / correlation_s).exp();
                let kick = jitter_rms * (1.0 - a * a).sqrt();
                let mut x = jitter_rms * gaussian(rng);
                (0..n)
                    .map(|_| {
                        let v = target + x;
                        x = a * x + kick * gaussian(rng);
                        v
                    })
                    .collect()
            }
            LoPhaseProcess::Ramp { .. } => (0..n).map(|k| self.nominal(k as f64 * dt)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn detector_examples() {
        let f = 161.827_324e6;
        assert_eq!(phase_detector(0.0, 0.37, f, f), 0.0);
        assert_abs_diff_eq!(phase_detector(0.3, 12.0, f, f), 0.3, epsilon = 1e-12);
        let df = 10.0;
        assert_abs_diff_eq!(phase_detector(0.0, 1e-3, f + df, f), TAU * df * 1e-3, epsilon = 1e-9);
        assert_abs_diff_eq!(phase_detector(PI, 0.0, f, f), PI);
        assert_abs_diff_eq!(phase_detector(-PI, 0.0, f, f), PI);
    }

    #[test]
    fn step_examples() {
        let mut s = ServoLoop::pdll_default();
        assert_eq!(loop_step(&mut s, 0.0, 1e-6), 0.0);
        s.ki = 0.0;
        assert_abs_diff_eq!(loop_step(&mut s, 0.1, 1e-6), -0.1 * s.kp);
        s.engaged = false;
        assert_eq!(loop_step(&mut s, 0.1, 1e-6), 0.0);
    }

    #[test]
    fn anti_windup_freezes_integrator() {
        let mut s = ServoLoop::pdll_default();
        s.actuator_limit = 1.0;
        for _ in 0..1000 {
            let a = loop_step(&mut s, 1.0, 1e-6);
            assert!(a.abs() <= 1.0);
        }
        assert_eq!(s.integrator, 0.0);
    }

    #[test]
    fn unstable_gains_named() {
        let mut s = ServoLoop::pdll_default();
        s.kp = 3e6;
        match s.check_stability(1e-6) {
            Err(Error::ServoUnstable { kp, .. }) => assert_eq!(kp, 3e6),
            other => panic!("{other:?}"),
        }
        let p = OpoParams::vacuum(1e7);
        assert!(matches!(
            run_locked(&p, &s, &LockRunConfig::default(), 0, 0),
            Err(Error::ServoUnstable { .. })
        ));
        s.engaged = false;
        assert!(s.check_stability(1e-6).is_ok());
    }

    #[test]
    fn closed_loop_variance_is_d_over_kp() {
        let mut p = OpoParams::vacuum(1e7);
        p.d_quantum = 50.0;
        let mut s = ServoLoop::pdll_default();
        s.kp = 2e4;
        s.ki = 0.0;
        let cfg = LockRunConfig {
            dt: 1e-6,
            duration_s: 0.2,
            ..Default::default()
        };
        let (traj, _) = run_locked(&p, &s, &cfg, 9, 0).unwrap();
        let tail = &traj.phase_error[1000..];
        let var = tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64;
        let oracle = p.d_quantum / s.kp;
        // ~2000 correlation times: a few percent statistical error.
        assert!((var / oracle - 1.0).abs() < 0.1, "{var} vs {oracle}");
    }

    #[test]
    fn zero_noise_locks_exactly() {
        let p = OpoParams::vacuum(1e7);
        let cfg = LockRunConfig {
            duration_s: 0.05,
            ..Default::default()
        };
        let (_, rep) = run_locked(&p, &ServoLoop::pdll_default(), &cfg, 1, 0).unwrap();
        assert_eq!(rep.residual_phase_rms, 0.0);
        assert_eq!(rep.residual_freq_error, 0.0);
        assert!(rep.locked);
        assert_eq!(rep.suppression_orders, None);
    }

    #[test]
    fn acquires_from_any_offset() {
        let p = OpoParams::vacuum(1e7);
        let cfg = |phi0: f64| LockRunConfig {
            duration_s: 2e-3,
            initial_phase: phi0,
            ..Default::default()
        };
        for k in -8..=8 {
            let phi0 = PI * k as f64 / 8.0 + if k == -8 { 1e-9 } else { 0.0 };
            let (traj, _) = run_locked(&p, &ServoLoop::pdll_default(), &cfg(phi0), 1, 0).unwrap();
            let last = *traj.phase_error.last().unwrap();
            assert!(wrap_phase(last).abs() < 1e-6, "phi0={phi0}: {last}");
        }
    }

    #[test]
    fn jitter_statistics() {
        let proc_ = qll_hold(PI / 2.0, 0.02).unwrap();
        let mut rng = substream(3, 0, Purpose::LoPhase);
        let x = proc_.sample(400_000, 1e-6, &mut rng);
        let rms = (x.iter().map(|v| (v - PI / 2.0).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
        assert!((rms / 0.02 - 1.0).abs() < 0.1, "{rms}");
        let flat = qll_hold(1.0, 0.0).unwrap().sample(10, 1e-6, &mut rng);
        assert!(flat.iter().all(|v| *v == 1.0));
        assert!(qll_hold(0.0, -1.0).is_err());
    }

    #[test]
    fn ramp_turns_around() {
        let r = LoPhaseProcess::scan(0.0, PI, 0.6);
        assert_eq!(r.nominal(0.0), 0.0);
        assert_abs_diff_eq!(r.nominal(0.3), PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.nominal(0.6), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(r.nominal(0.9), PI / 2.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn wrap_range(x in -1e4f64..1e4) {
            let w = wrap_phase(x);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-9);
        }

        #[test]
        fn actuation_bounded(e in -PI..PI, steps in 1usize..200) {
            let mut s = ServoLoop::pdll_default();
            s.actuator_limit = 1e5;
            for _ in 0..steps {
                let a = loop_step(&mut s, e, 1e-6);
                prop_assert!(a.abs() <= s.actuator_limit);
                prop_assert!(s.integrator.is_finite());
            }
        }
    }
}
