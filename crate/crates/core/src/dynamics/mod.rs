//! Linearized above-threshold OPO in the joint-mode basis.
//!
//! The twin-beam fluctuations are carried by four joint quadratures, each an
//! Ornstein-Uhlenbeck process `du = −r u dt + √(2q) dW` coupled to the
//! outside world through the output mirror. The slow mean phase difference
//! of the two beams is a separate, undamped variable.

mod analytic;
mod integrator;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analytic::{analytic_spectrum, output_psd};
pub use integrator::{step, Integrator, NoiseDraws, Scheme, TwoModeFluctuationState};
pub use trace::{
    output_field, run_ensemble, simulate_trajectory, synthesize_colored_noise, synthesize_colored_pair, BeamTrace,
    OutputCoupler, OutputTrace, PhaseController, TrajectoryConfig,
};

const PLANCK: f64 = 6.626_070_15e-34;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// The four joint quadratures of the twin beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointMode {
    /// `(δA1,0 − δA2,0)/√2`, squeezed.
    AmplitudeDifference,
    /// `(δA1,π/2 + δA2,π/2)/√2`, squeezed.
    PhaseSum,
    /// `(δA1,0 + δA2,0)/√2`, anti-squeezed.
    AmplitudeSum,
    /// `(δA1,π/2 − δA2,π/2)/√2`, quasi-undamped.
    PhaseDifference,
}

impl JointMode {
    pub const ALL: [JointMode; 4] = [
        JointMode::AmplitudeDifference,
        JointMode::PhaseSum,
        JointMode::AmplitudeSum,
        JointMode::PhaseDifference,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            JointMode::AmplitudeDifference => "amplitude_difference",
            JointMode::PhaseSum => "phase_sum",
            JointMode::AmplitudeSum => "amplitude_sum",
            JointMode::PhaseDifference => "phase_difference",
        }
    }

    /// Amplitude factor with which pump technical noise enters this mode.
    pub fn pump_coupling(self, params: &OpoParams) -> f64 {
        match self {
            JointMode::AmplitudeSum | JointMode::PhaseSum => 1.0,
            JointMode::AmplitudeDifference => params.imbalance,
            JointMode::PhaseDifference => 0.0,
        }
    }
}

impl fmt::Display for JointMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude_difference" | "u_minus" => Ok(JointMode::AmplitudeDifference),
            "phase_sum" | "v_plus" => Ok(JointMode::PhaseSum),
            "amplitude_sum" | "u_plus" => Ok(JointMode::AmplitudeSum),
            "phase_difference" | "v_minus" => Ok(JointMode::PhaseDifference),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

/// Relaxation rate `r` and input-noise strength `q` of one joint mode, both
/// in 1/s. The stationary intracavity variance is `q/r`; `q = r` is vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub rate: f64,
    pub noise: f64,
}

impl ModeParams {
    pub fn vacuum(rate: f64) -> Self {
        Self { rate, noise: rate }
    }

    /// Mode whose output spectrum is `1 − η_esc·depth/(1 + (Ω/r)²)`.
    ///
    /// `depth ≤ 1`; negative values describe anti-squeezing. Of the two
    /// noise strengths giving the same depth the larger one is used.
    pub fn from_depth(rate: f64, depth: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("mode rate must be positive, got {rate}")));
        }
        if !(depth <= 1.0 && depth.is_finite()) {
            return Err(Error::Domain(format!("squeezing depth must be <= 1, got {depth}")));
        }
        Ok(Self {
            rate,
            noise: 0.5 * rate * (1.0 + (1.0 - depth).sqrt()),
        })
    }

    /// Lorentzian depth `K = 4q(r − q)/r²`.
    pub fn depth(&self) -> f64 {
        4.0 * self.noise * (self.rate - self.noise) / (self.rate * self.rate)
    }

    pub fn stationary_variance(&self) -> f64 {
        self.noise / self.rate
    }

    fn validate(&self, mode: JointMode) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Validation(format!("{mode}: rate must be positive")));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Validation(format!("{mode}: noise must be >= 0")));
        }
        Ok(())
    }
}

/// Parameters of all four joint modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSet {
    pub amplitude_difference: ModeParams,
    pub phase_sum: ModeParams,
    pub amplitude_sum: ModeParams,
    pub phase_difference: ModeParams,
}

impl ModeSet {
    pub fn vacuum(rate: f64) -> Self {
        let m = ModeParams::vacuum(rate);
        Self {
            amplitude_difference: m,
            phase_sum: m,
            amplitude_sum: m,
            phase_difference: m,
        }
    }

    pub fn get(&self, mode: JointMode) -> &ModeParams {
        match mode {
            JointMode::AmplitudeDifference => &self.amplitude_difference,
            JointMode::PhaseSum => &self.phase_sum,
            JointMode::AmplitudeSum => &self.amplitude_sum,
            JointMode::PhaseDifference => &self.phase_difference,
        }
    }

    pub fn get_mut(&mut self, mode: JointMode) -> &mut ModeParams {
        match mode {
            JointMode::AmplitudeDifference => &mut self.amplitude_difference,
            JointMode::PhaseSum => &mut self.phase_sum,
            JointMode::AmplitudeSum => &mut self.amplitude_sum,
            JointMode::PhaseDifference => &mut self.phase_difference,
        }
    }

    pub fn max_rate(&self) -> f64 {
        JointMode::ALL.iter().map(|&m| self.get(m).rate).fold(0.0, f64::max)
    }
}

/// Pump amplitude noise rising below a corner frequency.
///
/// Power-law `level·(corner/f)^slope` for `0 < f < corner`, zero at and above
/// the corner and at DC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnicalNoise {
    pub corner_hz: f64,
    pub level_at_corner: f64,
    pub slope: f64,
}

impl TechnicalNoise {
    pub fn off() -> Self {
        Self {
            corner_hz: 1.5e6,
            level_at_corner: 0.0,
            slope: 2.0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.level_at_corner == 0.0
    }

    /// SNL-normalized PSD at `freq_hz` (either sign).
    pub fn psd(&self, freq_hz: f64) -> f64 {
        let f = freq_hz.abs();
        if f == 0.0 || f >= self.corner_hz {
            0.0
        } else {
            self.level_at_corner * (self.corner_hz / f).powf(self.slope)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.corner_hz > 0.0) || !(self.level_at_corner >= 0.0) || !self.slope.is_finite() {
            return Err(Error::Validation(
                "pump noise: corner must be > 0 and level >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Physical and model parameters of the oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpoParams {
    /// Signal-cavity rate setting the integration time scale, 1/s.
    pub gamma_c: f64,
    /// Escape efficiency of the output coupler.
    pub eta_esc: f64,
    /// Pump amplitude ratio, `σ² = P_pump / P_threshold`.
    pub sigma: f64,
    /// Quantum phase-difference diffusion coefficient, rad²/s.
    pub d_quantum: f64,
    /// RMS technical frequency-difference wander, Hz.
    pub tech_drift_span_hz: f64,
    /// Correlation time of the frequency wander, s.
    pub tech_drift_tau_s: f64,
    pub pump_noise: TechnicalNoise,
    /// Amplitude coupling of pump noise into the amplitude difference.
    pub imbalance: f64,
    /// Coupling of servo actuation into the amplitude difference, 1/rad.
    pub backaction: f64,
    pub modes: ModeSet,
    /// Output power per beam per unit of `σ − 1`, W.
    pub power_scale_w: f64,
    pub wavelength_m: f64,
    /// Nominal beat-note frequency of the twin beams, Hz.
    pub beat_hz: f64,
}

impl OpoParams {
    /// Oscillator whose joint modes all sit at the shot-noise limit.
    pub fn vacuum(gamma_c: f64) -> Self {
        Self {
            gamma_c,
            eta_esc: 1.0,
            sigma: 1.05f64.sqrt(),
            d_quantum: 0.0,
            tech_drift_span_hz: 0.0,
            tech_drift_tau_s: 0.0,
            pump_noise: TechnicalNoise::off(),
            imbalance: 0.0,
            backaction: 0.0,
            modes: ModeSet::vacuum(gamma_c),
            power_scale_w: 2.8e-3 / (1.05f64.sqrt() - 1.0),
            wavelength_m: 1064e-9,
            beat_hz: 161.827_324e6,
        }
    }

    /// Largest stable explicit step.
    pub fn max_dt(&self) -> f64 {
        0.05 / self.gamma_c.max(self.modes.max_rate())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_c > 0.0 && self.gamma_c.is_finite()) {
            return Err(Error::Validation("gamma_c must be positive".into()));
        }
        if !(self.eta_esc > 0.0 && self.eta_esc <= 1.0) {
            return Err(Error::Validation("eta_esc must lie in (0, 1]".into()));
        }
        if !(self.sigma > 1.0) {
            return Err(Error::Validation(format!(
                "sigma must exceed 1 for above-threshold operation, got {}",
                self.sigma
            )));
        }
        if !(self.d_quantum >= 0.0) || !(self.tech_drift_span_hz >= 0.0) {
            return Err(Error::Validation(
                "d_quantum and tech_drift_span_hz must be >= 0".into(),
            ));
        }
        if !(self.tech_drift_tau_s >= 0.0) {
            return Err(Error::Validation("tech_drift_tau_s must be >= 0".into()));
        }
        if self.tech_drift_span_hz > 0.0 && self.tech_drift_tau_s == 0.0 {
            return Err(Error::Validation(
                "tech_drift_tau_s must be > 0 when wander is enabled".into(),
            ));
        }
        if !(self.power_scale_w > 0.0) || !(self.wavelength_m > 0.0) {
            return Err(Error::Validation(
                "power_scale_w and wavelength_m must be positive".into(),
            ));
        }
        self.pump_noise.validate()?;
        for m in JointMode::ALL {
            self.modes.get(m).validate(m)?;
        }
        Ok(())
    }
}

/// Mean-field operating point of one beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Photon flux per beam, 1/s.
    pub flux: f64,
    /// Output power per beam, W.
    pub power_w: f64,
}

impl SteadyState {
    /// Mean amplitude `α = √flux`.
    pub fn amplitude(&self) -> f64 {
        self.flux.sqrt()
    }
}

/// Above threshold the per-beam flux grows linearly with `σ − 1`.
pub fn steady_state(params: &OpoParams) -> Result<SteadyState> {
    if !(params.sigma > 1.0) {
        return Err(Error::BelowThreshold { sigma: params.sigma });
    }
    let power_w = params.power_scale_w * (params.sigma - 1.0);
    let photon_energy = PLANCK * SPEED_OF_LIGHT / params.wavelength_m;
    Ok(SteadyState {
        flux: power_w / photon_energy,
        power_w,
    })
}

/// Variance `2·D·t` of the free phase-difference random walk.
pub fn phase_diffusion_variance(d_quantum: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if !(d_quantum >= 0.0) {
        return Err(Error::Domain(format!("diffusion must be >= 0, got {d_quantum}")));
    }
    Ok(2.0 * d_quantum * t)
}
