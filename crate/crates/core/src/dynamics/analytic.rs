use std::f64::consts::TAU;

use super::{JointMode, OpoParams};
use crate::error::{Error, Result};
use crate::spectral::NoiseSpectrum;

/// Closed-form output PSD of one joint mode at `freq_hz`, SNL units:
/// `1 + 4 η_esc q (q − r) / (r² + Ω²)` plus coupled pump noise.
pub fn output_psd(mode: JointMode, params: &OpoParams, freq_hz: f64) -> f64 {
    let mp = params.modes.get(mode);
    let omega = TAU * freq_hz;
    let (r, q) = (mp.rate, mp.noise);
    let quantum = 1.0 + 4.0 * params.eta_esc * q * (q - r) / (r * r + omega * omega);
    let c = mode.pump_coupling(params);
    quantum + c * c * params.pump_noise.psd(freq_hz)
}

/// Exact PSD of a joint mode on a grid of positive frequencies.
pub fn analytic_spectrum(mode: JointMode, params: &OpoParams, freqs_hz: &[f64]) -> Result<NoiseSpectrum> {
    if let Some(&bad) = freqs_hz.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::Domain(format!("analysis frequency must be positive, got {bad}")));
    }
    let psd = freqs_hz.iter().map(|&f| output_psd(mode, params, f)).collect();
    Ok(NoiseSpectrum::new(freqs_hz.to_vec(), psd))
}
