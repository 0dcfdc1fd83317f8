use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{JointMode, OpoParams};
use crate::error::{Error, Result};
use crate::rng::gaussian;

/// Instantaneous joint-mode fluctuations plus the slow phase variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoModeFluctuationState {
    pub u_minus: f64,
    pub v_plus: f64,
    pub u_plus: f64,
    pub v_minus: f64,
    /// Mean phase difference of the twin beams, unwrapped, rad.
    pub phi_diff: f64,
    /// Technical frequency-difference wander, Hz.
    pub freq_wander_hz: f64,
    pub t: f64,
}

impl TwoModeFluctuationState {
    pub fn mode(&self, mode: JointMode) -> f64 {
        match mode {
            JointMode::AmplitudeDifference => self.u_minus,
            JointMode::PhaseSum => self.v_plus,
            JointMode::AmplitudeSum => self.u_plus,
            JointMode::PhaseDifference => self.v_minus,
        }
    }

    fn mode_mut(&mut self, mode: JointMode) -> &mut f64 {
        match mode {
            JointMode::AmplitudeDifference => &mut self.u_minus,
            JointMode::PhaseSum => &mut self.v_plus,
            JointMode::AmplitudeSum => &mut self.u_plus,
            JointMode::PhaseDifference => &mut self.v_minus,
        }
    }

    /// Draw the mode fluctuations and the wander from their stationary laws.
    pub fn stationary<R: Rng + ?Sized>(params: &OpoParams, rng: &mut R) -> Self {
        let mut s = Self::default();
        for m in JointMode::ALL {
            *s.mode_mut(m) = params.modes.get(m).stationary_variance().sqrt() * gaussian(rng);
        }
        s.freq_wander_hz = params.tech_drift_span_hz * gaussian(rng);
        s
    }
}

/// Standard-normal draws consumed by one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseDraws {
    /// Vacuum entering through the output coupler, per joint mode.
    pub escape: [f64; 4],
    /// Vacuum entering through intracavity loss, per joint mode.
    pub loss: [f64; 4],
    pub diffusion: f64,
    pub wander: f64,
}

impl NoiseDraws {
    pub fn draw_modes<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..4 {
            self.escape[i] = gaussian(rng);
            self.loss[i] = gaussian(rng);
        }
    }

    pub fn draw_phase<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.diffusion = gaussian(rng);
        self.wander = gaussian(rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    /// Exponential decay with the exact OU variance increment.
    #[default]
    ExactOu,
}

#[derive(Debug, Clone, Copy)]
struct ModeCoefficients {
    decay: f64,
    kick_escape: f64,
    kick_loss: f64,
}

/// Fixed-step integrator with precomputed per-mode coefficients.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: OpoParams,
    dt: f64,
    scheme: Scheme,
    coeffs: [ModeCoefficients; 4],
    diffusion_kick: f64,
    wander_decay: f64,
    wander_kick: f64,
}

impl Integrator {
    pub fn new(params: &OpoParams, dt: f64, scheme: Scheme) -> Result<Self> {
        let limit = params.max_dt();
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::StepSize { dt, limit });
        }
        Ok(Self::phase_only_unchecked(params, dt, scheme))
    }

    /// Integrator that only advances the slow phase variables; the mode
    /// step-size limit does not apply.
    pub fn phase_only(params: &OpoParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::StepSize {
                dt,
                limit: f64::INFINITY,
            });
        }
        Ok(Self::phase_only_unchecked(params, dt, Scheme::ExactOu))
    }

    fn phase_only_unchecked(params: &OpoParams, dt: f64, scheme: Scheme) -> Self {
        let eta = params.eta_esc;
        let coeffs = JointMode::ALL.map(|m| {
            let mp = params.modes.get(m);
            let (decay, kick) = match scheme {
                Scheme::EulerMaruyama => (1.0 - mp.rate * dt, (2.0 * mp.noise * dt).sqrt()),
                Scheme::ExactOu => {
                    let a = (-mp.rate * dt).exp();
                    (a, (mp.noise * (1.0 - a * a) / mp.rate).sqrt())
                }
            };
            ModeCoefficients {
                decay,
                kick_escape: kick * eta.sqrt(),
                kick_loss: kick * (1.0 - eta).sqrt(),
            }
        });
        let (wander_decay, wander_kick) = if params.tech_drift_tau_s > 0.0 {
            let a = (-dt / params.tech_drift_tau_s).exp();
            (a, params.tech_drift_span_hz * (1.0 - a * a).sqrt())
        } else {
            (0.0, 0.0)
        };
        Self {
            params: *params,
            dt,
            scheme,
            coeffs,
            diffusion_kick: (2.0 * params.d_quantum * dt).sqrt(),
            wander_decay,
            wander_kick,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn params(&self) -> &OpoParams {
        &self.params
    }

    /// Advance the four joint modes. `actuation` (rad/s) only enters through
    /// the back-action coupling.
    #[inline]
    pub fn advance_modes(&self, state: &mut TwoModeFluctuationState, draws: &NoiseDraws, actuation: f64) {
        for (i, m) in JointMode::ALL.into_iter().enumerate() {
            let c = &self.coeffs[i];
            let u = state.mode_mut(m);
            *u = c.decay * *u + c.kick_escape * draws.escape[i] + c.kick_loss * draws.loss[i];
        }
        if self.params.backaction != 0.0 {
            state.u_minus += self.params.backaction * actuation * self.dt;
        }
    }

    /// Advance the phase difference and the frequency wander.
    #[inline]
    pub fn advance_phase(&self, state: &mut TwoModeFluctuationState, draws: &NoiseDraws, actuation: f64) {
        state.phi_diff += (TAU * state.freq_wander_hz + actuation) * self.dt + self.diffusion_kick * draws.diffusion;
        state.freq_wander_hz = self.wander_decay * state.freq_wander_hz + self.wander_kick * draws.wander;
        state.t += self.dt;
    }

    pub fn step(&self, state: &TwoModeFluctuationState, draws: &NoiseDraws, actuation: f64) -> TwoModeFluctuationState {
        let mut next = *state;
        self.advance_modes(&mut next, draws, actuation);
        self.advance_phase(&mut next, draws, actuation);
        next
    }
}

/// One step of the full state; deterministic given the draws.
pub fn step(
    state: &TwoModeFluctuationState,
    params: &OpoParams,
    dt: f64,
    draws: &NoiseDraws,
    scheme: Scheme,
) -> Result<TwoModeFluctuationState> {
    Ok(Integrator::new(params, dt, scheme)?.step(state, draws, 0.0))
}
