//! Optical measurement models.
//!
//! Photocurrents are expressed in the normalized units of [`BeamTrace`]: a
//! coherent beam of mean amplitude α produces current fluctuations α·δA₀ per
//! sample, whose variance α² is its shot-noise level.

use serde::{Deserialize, Serialize};

use crate::dynamics::{BeamTrace, OutputTrace};
use crate::error::{Error, Result};
use crate::rng::{gaussian, substream, Purpose, StreamRng};
use crate::servo::LoPhaseProcess;
use crate::spectral::{zero_span, AnalyzerSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOscillator {
    /// Offset from the fundamental, Hz.
    pub carrier_hz: f64,
    /// β, √(photons/s).
    pub amplitude: f64,
    /// Static phase θ, used when no trace is attached.
    pub phase: f64,
    pub phase_trace: Option<Vec<f64>>,
}

impl LocalOscillator {
    /// Up- and down-shifted copies of one laser, one AOM each.
    pub fn aom_pair(drive_hz: f64, amplitude: f64, theta1: f64, theta2: f64) -> (Self, Self) {
        let lo = |carrier_hz, phase| Self {
            carrier_hz,
            amplitude,
            phase,
            phase_trace: None,
        };
        (lo(drive_hz, theta1), lo(-drive_hz, theta2))
    }

    pub fn with_phase_trace(mut self, trace: Vec<f64>) -> Self {
        self.phase_trace = Some(trace);
        self
    }

    #[inline]
    pub fn phase_at(&self, k: usize) -> f64 {
        self.phase_trace.as_ref().map_or(self.phase, |p| p[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCleaner {
    pub hwhm_hz: f64,
    pub fsr_hz: f64,
}

impl ModeCleaner {
    /// FSR of one third of the twin-beam separation.
    pub fn for_beat(hwhm_hz: f64, beat_hz: f64) -> Self {
        Self {
            hwhm_hz,
            fsr_hz: beat_hz / 3.0,
        }
    }

    /// Integer number of FSRs separating `f1` and `f2`, if within one HWHM.
    pub fn resonance_multiple(&self, f1_hz: f64, f2_hz: f64) -> Option<i64> {
        let n = ((f2_hz - f1_hz) / self.fsr_hz).round();
        ((f2_hz - f1_hz - n * self.fsr_hz).abs() <= self.hwhm_hz).then_some(n as i64)
    }

    /// Power transmission at `detuning_hz` from a reference resonance.
    pub fn transmission(&self, detuning_hz: f64) -> f64 {
        let d = detuning_hz - (detuning_hz / self.fsr_hz).round() * self.fsr_hz;
        1.0 / (1.0 + (d / self.hwhm_hz).powi(2))
    }
}

pub fn mode_cleaner_resonance_check(mc: &ModeCleaner, f1_hz: f64, f2_hz: f64) -> Result<bool> {
    if !(mc.fsr_hz > 0.0) {
        return Err(Error::Validation("mode cleaner fsr_hz must be > 0".into()));
    }
    Ok(mc.resonance_multiple(f1_hz, f2_hz).is_some())
}

/// Reference used to normalize homodyne spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnlMethod {
    /// OPO beams replaced by coherent beams of equal power: shot noise of
    /// both OPO and LO light.
    #[default]
    CoherentSubstitution,
    /// OPO ports blocked: LO shot noise only.
    BlockedOpo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionChain {
    pub eta: f64,
    pub c1: f64,
    pub c2: f64,
    /// OPO/LO power ratio per beam.
    pub rho: f64,
    /// Electronic noise relative to the unit-efficiency SNL of the
    /// measurement, dB; `None` is a noiseless amplifier.
    pub electronic_noise_db: Option<f64>,
    #[serde(default)]
    pub snl_method: SnlMethod,
    /// Per-beam OPO flux (photons/s) fixing the electronic level; `None`
    /// uses the measured beams.
    #[serde(default)]
    pub reference_flux: Option<f64>,
    /// Allowed LO/beam carrier mismatch before the BHD output leaves baseband.
    #[serde(default = "default_lo_tolerance")]
    pub lo_tolerance_hz: f64,
}

fn default_lo_tolerance() -> f64 {
    10.0
}

impl DetectionChain {
    pub fn nominal() -> Self {
        Self {
            eta: 0.95,
            c1: 0.986,
            c2: 0.928,
            rho: 2.8 / 6.5,
            electronic_noise_db: Some(-15.0),
            snl_method: SnlMethod::CoherentSubstitution,
            reference_flux: None,
            lo_tolerance_hz: default_lo_tolerance(),
        }
    }

    /// Unit efficiencies, no electronics.
    pub fn ideal(rho: f64) -> Self {
        Self {
            eta: 1.0,
            c1: 1.0,
            c2: 1.0,
            rho,
            electronic_noise_db: None,
            snl_method: SnlMethod::CoherentSubstitution,
            reference_flux: None,
            lo_tolerance_hz: default_lo_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.eta) {
            return Err(Error::Validation(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !unit(self.c1) || !unit(self.c2) {
            return Err(Error::Validation(format!(
                "contrasts must lie in (0, 1], got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Validation(format!("rho must be >= 0, got {}", self.rho)));
        }
        if let Some(db) = self.electronic_noise_db {
            if !db.is_finite() {
                return Err(Error::Validation("electronic_noise_db must be finite".into()));
            }
        }
        if let Some(f) = self.reference_flux {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Validation("reference_flux must be > 0".into()));
            }
        }
        if !(self.lo_tolerance_hz >= 0.0) {
            return Err(Error::Validation("lo_tolerance_hz must be >= 0".into()));
        }
        Ok(())
    }

    /// Electronic variance per sample for OPO amplitude `alpha`: the set
    /// level below the unit-efficiency SNL of both homodyne detectors.
    pub fn bhd_electronic_variance(&self, alpha: f64) -> f64 {
        let flux = self.reference_flux.unwrap_or(alpha * alpha);
        let lo = if self.rho > 0.0 { flux / self.rho } else { 0.0 };
        electronic_variance(self.electronic_noise_db, 2.0 * (flux + lo))
    }

    /// Same for direct detection of both beams.
    pub fn direct_electronic_variance(&self, alpha: f64) -> f64 {
        let flux = self.reference_flux.unwrap_or(alpha * alpha);
        electronic_variance(self.electronic_noise_db, 2.0 * flux)
    }

    /// LO amplitude giving `rho` for an OPO beam of amplitude `alpha`.
    pub fn lo_amplitude(&self, alpha: f64) -> Result<f64> {
        if self.rho > 0.0 {
            Ok(alpha / self.rho.sqrt())
        } else {
            Err(Error::Validation("rho = 0 leaves the LO amplitude undefined".into()))
        }
    }
}

/// Variance `db` below `unit_snl`.
pub fn electronic_variance(db: Option<f64>, unit_snl: f64) -> f64 {
    db.map_or(0.0, |d| 10f64.powf(d / 10.0) * unit_snl)
}

/// Photocurrent samples with the levels needed to normalize them.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Per-sample variance of the matching shot-noise reference, including
    /// the electronic contribution.
    pub snl_level: f64,
    /// Per-sample variance of the electronics alone.
    pub floor_level: f64,
}

impl PhotocurrentTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    /// Samples in SNL units (white shot noise has unit PSD).
    pub fn normalized(&self) -> Vec<f64> {
        let s = 1.0 / self.snl_level.sqrt();
        self.samples.iter().map(|x| x * s).collect()
    }

    /// Electronic floor in SNL units.
    pub fn floor_snl(&self) -> f64 {
        self.floor_level / self.snl_level
    }
}

fn check_pair(b1: &BeamTrace, b2: &BeamTrace) -> Result<()> {
    if b1.len() != b2.len() {
        return Err(Error::LengthMismatch(b1.len(), b2.len()));
    }
    Ok(())
}

/// Difference current after rotating both polarizations by `angle` before
/// the polarizing splitter. Cross terms pair each mean field with the
/// orthogonally polarized vacuum at its own carrier, which the twin beams
/// never populate.
pub fn polarization_rotated_difference(
    b1: &BeamTrace,
    b2: &BeamTrace,
    angle: f64,
    eta: f64,
    electronic: f64,
    rng: &mut StreamRng,
) -> Result<PhotocurrentTrace> {
    check_pair(b1, b2)?;
    if !(electronic >= 0.0) {
        return Err(Error::Validation("electronic variance must be >= 0".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Validation(format!("eta must lie in [0, 1], got {eta}")));
    }
    let (a1, a2) = (b1.mean_amplitude, b2.mean_amplitude);
    let (s, c) = angle.sin_cos();
    let (cc, ss, cs) = (c * c, s * s, c * s);
    // Mean flux at each detector.
    let flux_a = cc * a1 * a1 + ss * a2 * a2;
    let flux_b = ss * a1 * a1 + cc * a2 * a2;
    let loss_a = (eta * (1.0 - eta) * flux_a).sqrt();
    let loss_b = (eta * (1.0 - eta) * flux_b).sqrt();
    let unit_snl = a1 * a1 + a2 * a2;
    let elec = electronic;
    let elec_sd = elec.sqrt();
    let rotated = angle.rem_euclid(std::f64::consts::PI) != 0.0;
    let samples = (0..b1.len())
        .map(|k| {
            // Intensity follows each beam's own amplitude quadrature, whatever
            // its phase relative to the LOs.
            let (x1, x2) = (b1.amplitude[k], b2.amplitude[k]);
            let (v1, v2) = if rotated {
                (gaussian(rng), gaussian(rng))
            } else {
                (0.0, 0.0)
            };
            let da = cc * a1 * x1 + ss * a2 * x2 + cs * (a1 * v1 + a2 * v2);
            let db = ss * a1 * x1 + cc * a2 * x2 - cs * (a1 * v1 + a2 * v2);
            let mut i = eta * (da - db);
            if eta < 1.0 {
                i += loss_a * gaussian(rng) - loss_b * gaussian(rng);
            }
            if elec > 0.0 {
                i += elec_sd * gaussian(rng);
            }
            i
        })
        .collect();
    Ok(PhotocurrentTrace {
        dt: b1.dt,
        samples,
        snl_level: eta * unit_snl + elec,
        floor_level: elec,
    })
}

/// One photodiode per beam, currents subtracted. `electronic` is the
/// amplifier variance per sample.
pub fn direct_detect_difference(
    b1: &BeamTrace,
    b2: &BeamTrace,
    eta: f64,
    electronic: f64,
    rng: &mut StreamRng,
) -> Result<PhotocurrentTrace> {
    polarization_rotated_difference(b1, b2, 0.0, eta, electronic, rng)
}

/// Shot-noise reference: each detector sees a 50/50 mix of both beams.
pub fn snl_calibrate_45deg(
    b1: &BeamTrace,
    b2: &BeamTrace,
    eta: f64,
    electronic: f64,
    rng: &mut StreamRng,
) -> Result<PhotocurrentTrace> {
    polarization_rotated_difference(b1, b2, std::f64::consts::FRAC_PI_4, eta, electronic, rng)
}

/// Expected normalized PSD of the direct-detection difference for an
/// amplitude-difference spectrum `s_minus` (linear, SNL = 1); the
/// electronics sit `electronic_noise_db` below the unit-efficiency SNL.
pub fn direct_expected_ratio(s_minus: f64, eta: f64, electronic_noise_db: Option<f64>) -> f64 {
    let e = electronic_variance(electronic_noise_db, 1.0);
    (eta * eta * s_minus + eta * (1.0 - eta) + e) / (eta + e)
}

fn bhd_snl_level(chain: &DetectionChain, alpha_sq: f64, beta_sq: f64, elec: f64) -> f64 {
    match chain.snl_method {
        SnlMethod::CoherentSubstitution => chain.eta * 2.0 * (beta_sq + alpha_sq) + elec,
        SnlMethod::BlockedOpo => chain.eta * 2.0 * beta_sq + elec,
    }
}

/// Sum of the two balanced-homodyne difference currents,
/// `δi₊ = β(δA₁,θ₁ + δA₂,θ₂) + α(δB₁ + δB₂)`, with each signal term scaled
/// by its contrast, the mode-mismatched remainder entering as vacuum, and
/// detector efficiency applied as loss.
pub fn bhd_sum_current(
    b1: &BeamTrace,
    b2: &BeamTrace,
    lo1: &LocalOscillator,
    lo2: &LocalOscillator,
    chain: &DetectionChain,
    rng: &mut StreamRng,
) -> Result<PhotocurrentTrace> {
    let alpha = (0.5 * (b1.mean_amplitude.powi(2) + b2.mean_amplitude.powi(2))).sqrt();
    bhd_with_electronics(b1, b2, lo1, lo2, chain, chain.bhd_electronic_variance(alpha), rng)
}

fn bhd_with_electronics(
    b1: &BeamTrace,
    b2: &BeamTrace,
    lo1: &LocalOscillator,
    lo2: &LocalOscillator,
    chain: &DetectionChain,
    elec: f64,
    rng: &mut StreamRng,
) -> Result<PhotocurrentTrace> {
    chain.validate()?;
    check_pair(b1, b2)?;
    for (lo, b) in [(lo1, b1), (lo2, b2)] {
        if (lo.carrier_hz - b.carrier_offset_hz).abs() > chain.lo_tolerance_hz {
            return Err(Error::HeterodyneLeakage {
                lo_hz: lo.carrier_hz,
                beam_hz: b.carrier_offset_hz,
            });
        }
        if let Some(p) = &lo.phase_trace {
            if p.len() != b.len() {
                return Err(Error::LengthMismatch(p.len(), b.len()));
            }
        }
    }
    let eta = chain.eta;
    let detector = |b: &BeamTrace, lo: &LocalOscillator, c: f64| {
        let (alpha, beta) = (b.mean_amplitude, lo.amplitude);
        let signal = eta * beta * c;
        let lo_vac = eta * alpha;
        // Mode mismatch and detector loss are independent vacua.
        let other =
            (eta * eta * beta * beta * (1.0 - c * c) + eta * (1.0 - eta) * (beta * beta + alpha * alpha)).sqrt();
        (signal, lo_vac, other)
    };
    let d1 = detector(b1, lo1, chain.c1);
    let d2 = detector(b2, lo2, chain.c2);
    let (a1, a2) = (b1.mean_amplitude, b2.mean_amplitude);
    let (l1, l2) = (lo1.amplitude, lo2.amplitude);
    let alpha_sq = 0.5 * (a1 * a1 + a2 * a2);
    let beta_sq = 0.5 * (l1 * l1 + l2 * l2);
    let elec_sd = elec.sqrt();
    let samples = (0..b1.len())
        .map(|k| {
            let mut i = 0.0;
            for (b, lo, d) in [(b1, lo1, d1), (b2, lo2, d2)] {
                i += d.0 * b.quadrature(k, lo.phase_at(k)) + d.1 * gaussian(rng);
                if d.2 > 0.0 {
                    i += d.2 * gaussian(rng);
                }
            }
            if elec > 0.0 {
                i += elec_sd * gaussian(rng);
            }
            i
        })
        .collect();
    Ok(PhotocurrentTrace {
        dt: b1.dt,
        samples,
        snl_level: bhd_snl_level(chain, alpha_sq, beta_sq, elec),
        floor_level: elec,
    })
}

/// Measured SNL trace obtained with the configured [`SnlMethod`].
pub fn bhd_snl_trace(
    len: usize,
    dt: f64,
    alpha: f64,
    lo1: &LocalOscillator,
    lo2: &LocalOscillator,
    chain: &DetectionChain,
    rng: &mut StreamRng,
) -> Result<PhotocurrentTrace> {
    let a = match chain.snl_method {
        SnlMethod::CoherentSubstitution => alpha,
        SnlMethod::BlockedOpo => 0.0,
    };
    let b1 = BeamTrace::coherent(len, dt, a, lo1.carrier_hz, rng);
    let b2 = BeamTrace::coherent(len, dt, a, lo2.carrier_hz, rng);
    let elec = chain.bhd_electronic_variance(alpha);
    bhd_with_electronics(&b1, &b2, lo1, lo2, chain, elec, rng)
}

/// Expected BHD sum-current PSD in SNL units, given the signal quadrature
/// (co)variances seen by the two LOs at one frequency.
pub fn bhd_expected_ratio(chain: &DetectionChain, v11: f64, v22: f64, v12: f64) -> f64 {
    let (eta, c1, c2, rho) = (chain.eta, chain.c1, chain.c2, chain.rho);
    // β² = 1, α² = ρ.
    let unit_snl = 2.0 * (1.0 + rho);
    let e = electronic_variance(chain.electronic_noise_db, unit_snl);
    let num = eta * eta * (c1 * c1 * v11 + c2 * c2 * v22 + 2.0 * c1 * c2 * v12)
        + eta * eta * (2.0 - c1 * c1 - c2 * c2)
        + eta * (1.0 - eta) * unit_snl
        + eta * eta * 2.0 * rho
        + e;
    let snl = match chain.snl_method {
        SnlMethod::CoherentSubstitution => eta * unit_snl + e,
        SnlMethod::BlockedOpo => eta * 2.0 + e,
    };
    num / snl
}

/// [`bhd_expected_ratio`] at θ₁ = θ₂ = π/2 for phase-sum spectrum `s_plus`
/// and phase-difference spectrum `s_vminus` (linear).
pub fn bhd_phase_sum_ratio(chain: &DetectionChain, s_plus: f64, s_vminus: f64) -> f64 {
    let v11 = 0.5 * (s_plus + s_vminus);
    let v12 = 0.5 * (s_plus - s_vminus);
    bhd_expected_ratio(chain, v11, v11, v12)
}

/// Zero-span record of a quadrature scan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadratureScan {
    pub time_s: Vec<f64>,
    /// Scanned LO phase at the center of each analysis window.
    pub theta_rad: Vec<f64>,
    /// Power in SNL units.
    pub power_snl: Vec<f64>,
    /// Electronic floor in SNL units.
    pub floor_snl: f64,
}

/// BHD sum current while LO 1 follows `scan` and LO 2 is held by `hold`,
/// analyzed in zero span at `center_hz`.
#[allow(clippy::too_many_arguments)]
pub fn quadrature_scan_trace(
    trace: &OutputTrace,
    chain: &DetectionChain,
    scan: &LoPhaseProcess,
    hold: &LoPhaseProcess,
    center_hz: f64,
    settings: &AnalyzerSettings,
    seed: u64,
    trajectory: u64,
) -> Result<QuadratureScan> {
    scan.validate()?;
    hold.validate()?;
    let (b1, b2) = trace.split_beams();
    let n = b1.len();
    let mut rng_lo = substream(seed, trajectory, Purpose::LoPhase);
    let mut rng_det = substream(seed, trajectory, Purpose::Detection);
    let theta1 = scan.sample(n, trace.dt, &mut rng_lo);
    let theta2 = hold.sample(n, trace.dt, &mut rng_lo);
    let beta = chain.lo_amplitude(trace.mean_amplitude)?;
    let (lo1, lo2) = LocalOscillator::aom_pair(0.5 * trace.beat_hz, beta, 0.0, 0.0);
    let lo1 = lo1.with_phase_trace(theta1);
    let lo2 = lo2.with_phase_trace(theta2);
    let current = bhd_sum_current(&b1, &b2, &lo1, &lo2, chain, &mut rng_det)?;
    let zs = zero_span(&current.normalized(), current.sample_rate(), center_hz, settings)?;
    let theta = lo1.phase_trace.as_ref().expect("trace attached");
    Ok(QuadratureScan {
        theta_rad: zs.center_index.iter().map(|&i| theta[i]).collect(),
        time_s: zs.time_s,
        power_snl: zs.power,
        floor_snl: current.floor_snl(),
    })
}

/// Least-squares fit of scan power to
/// `a₀ + a₁ cos θ + b₁ sin θ + a₂ cos 2θ + b₂ sin 2θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureFit {
    pub coeffs: [f64; 5],
}

fn harmonics(theta: f64) -> [f64; 5] {
    let (s1, c1) = theta.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    [1.0, c1, s1, c2, s2]
}

impl QuadratureFit {
    pub fn fit(theta: &[f64], power: &[f64]) -> Result<Self> {
        if theta.len() != power.len() {
            return Err(Error::LengthMismatch(theta.len(), power.len()));
        }
        let mut m = [[0.0; 6]; 5];
        for (&t, &p) in theta.iter().zip(power) {
            let h = harmonics(t);
            for i in 0..5 {
                for j in 0..5 {
                    m[i][j] += h[i] * h[j];
                }
                m[i][5] += h[i] * p;
            }
        }
        // Gauss-Jordan with partial pivoting on the normal equations.
        for col in 0..5 {
            let piv = (col..5)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .expect("non-empty");
            if !(m[piv][col].abs() > 1e-9 * theta.len() as f64) {
                return Err(Error::Domain(
                    "scan does not cover enough of the phase circle for a harmonic fit".into(),
                ));
            }
            m.swap(col, piv);
            for r in 0..5 {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    let pivot = m[col];
                    for (x, p) in m[r].iter_mut().zip(pivot).skip(col) {
                        *x -= f * p;
                    }
                }
            }
        }
        Ok(Self {
            coeffs: std::array::from_fn(|i| m[i][5] / m[i][i]),
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        harmonics(theta).iter().zip(&self.coeffs).map(|(h, c)| h * c).sum()
    }

    /// Location in [0, 2π) and value of the fitted minimum.
    pub fn argmin(&self) -> (f64, f64) {
        const GRID: usize = 4096;
        let step = std::f64::consts::TAU / GRID as f64;
        let k = (0..GRID)
            .min_by(|&a, &b| self.eval(a as f64 * step).total_cmp(&self.eval(b as f64 * step)))
            .expect("non-empty");
        // Golden-section refinement inside the bracketing cells.
        let (mut lo, mut hi) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        while hi - lo > 1e-10 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if self.eval(a) < self.eval(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let t = 0.5 * (lo + hi);
        (t.rem_euclid(std::f64::consts::TAU), self.eval(t))
    }
}
