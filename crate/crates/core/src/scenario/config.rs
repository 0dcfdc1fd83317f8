use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::{nominal_model, CalibrationTargets, ANALYSIS_HZ};
use crate::detection::{mode_cleaner_resonance_check, DetectionChain, ModeCleaner};
use crate::dynamics::OpoParams;
use crate::error::{Error, Result};
use crate::servo::{qll_hold, LoPhaseProcess, ServoLoop};
use crate::spectral::{AnalyzerSettings, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Beatnote,
    IntensityDiff,
    PhaseSumScan,
    EntanglementReport,
    Calibrate,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::Beatnote,
        ScenarioName::IntensityDiff,
        ScenarioName::PhaseSumScan,
        ScenarioName::EntanglementReport,
        ScenarioName::Calibrate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Beatnote => "beatnote",
            ScenarioName::IntensityDiff => "intensity_diff",
            ScenarioName::PhaseSumScan => "phase_sum_scan",
            ScenarioName::EntanglementReport => "entanglement_report",
            ScenarioName::Calibrate => "calibrate",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|n| n.as_str()).collect();
            Error::Validation(format!("unknown scenario `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: ScenarioName,
    pub seed: u64,
    /// Recorded time per trajectory, s.
    pub duration_s: f64,
    pub trajectories: usize,
    /// Frequency at which headline levels are read, Hz.
    pub analysis_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoSection {
    pub pdll: ServoLoop,
    /// Step of the stand-alone phase-lock simulation, s.
    pub lock_dt: f64,
    /// Gate time of the frequency-error estimate, s.
    pub gate_s: f64,
    /// Lock acquisition time discarded before recording, s.
    pub warmup_s: f64,
    /// Quadrature lock holding the homodyne LO phases.
    pub qll: LoPhaseProcess,
    /// LO 1 sweep of the quadrature scan.
    pub scan: LoPhaseProcess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSection {
    /// Noise spectra (intensity difference, entanglement report).
    pub spectrum: AnalyzerSettings,
    /// Quadrature scan.
    pub zero_span: AnalyzerSettings,
    /// Beat note, span as offsets from the carrier.
    pub beatnote: AnalyzerSettings,
}

/// Measured levels the `calibrate` scenario solves for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub s_minus_measured_db: f64,
    pub s_plus_raw_db: f64,
    pub eta_esc: f64,
    pub k_minus: f64,
    pub phase_difference_rate: f64,
}

impl CalibrationSection {
    pub fn nominal() -> Self {
        let t = CalibrationTargets::nominal();
        Self {
            s_minus_measured_db: t.s_minus_measured_db,
            s_plus_raw_db: t.s_plus_raw_db,
            eta_esc: t.eta_esc,
            k_minus: t.k_minus,
            phase_difference_rate: t.phase_difference_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario: RunSection,
    pub opo: OpoParams,
    pub detection: DetectionChain,
    pub servo: ServoSection,
    pub analyzer: AnalyzerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
    #[serde(default, rename = "mode_cleaner")]
    pub mode_cleaners: Vec<ModeCleaner>,
}

impl Scenario {
    /// Experiment settings with a scenario-appropriate length and ensemble.
    pub fn nominal(name: ScenarioName) -> Self {
        let (duration_s, trajectories) = match name {
            ScenarioName::Beatnote => (20.0, 1),
            ScenarioName::IntensityDiff => (4e-3, 16),
            ScenarioName::PhaseSumScan => (4e-3, 16),
            ScenarioName::EntanglementReport => (4e-3, 16),
            ScenarioName::Calibrate => (1e-3, 1),
        };
        let opo = nominal_model().params;
        let fsr = 53.942_441e6;
        Self {
            scenario: RunSection {
                name,
                seed: 1,
                duration_s,
                trajectories,
                analysis_hz: ANALYSIS_HZ,
            },
            opo,
            detection: DetectionChain::nominal(),
            servo: ServoSection {
                pdll: ServoLoop::pdll_default(),
                lock_dt: 1e-6,
                gate_s: 10e-3,
                warmup_s: 50e-6,
                qll: qll_hold(FRAC_PI_2, 0.02).expect("valid jitter"),
                scan: LoPhaseProcess::scan(0.0, TAU, 0.5 * duration_s),
            },
            analyzer: AnalyzerSection {
                spectrum: AnalyzerSettings::new(
                    100e3,
                    100e3,
                    Span::Range {
                        start_hz: 0.3e6,
                        stop_hz: 3e6,
                    },
                    100,
                ),
                // The 100 Hz video filter of a 0.6 s sweep, rescaled to the
                // compressed sweep.
                zero_span: AnalyzerSettings::new(30e3, 15e3, Span::Zero { center_hz: ANALYSIS_HZ }, 1),
                beatnote: AnalyzerSettings::new(
                    1.0,
                    1.0,
                    Span::Range {
                        start_hz: -50.0,
                        stop_hz: 50.0,
                    },
                    10,
                ),
            },
            calibration: (name == ScenarioName::Calibrate).then(CalibrationSection::nominal),
            mode_cleaners: vec![
                ModeCleaner {
                    hwhm_hz: 160e3,
                    fsr_hz: fsr,
                },
                ModeCleaner {
                    hwhm_hz: 170e3,
                    fsr_hz: fsr,
                },
            ],
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(format!("cannot serialize scenario: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let run = &self.scenario;
        if run.trajectories < 1 {
            return Err(Error::Validation("scenario.trajectories must be >= 1".into()));
        }
        if !(run.duration_s > 0.0 && run.duration_s.is_finite()) {
            return Err(Error::Validation(format!(
                "scenario.duration_s must be > 0, got {}",
                run.duration_s
            )));
        }
        if !(run.analysis_hz > 0.0 && run.analysis_hz.is_finite()) {
            return Err(Error::Validation("scenario.analysis_hz must be > 0".into()));
        }
        self.opo.validate()?;
        self.detection.validate()?;

        let servo = &self.servo;
        servo.pdll.validate()?;
        for (name, v) in [("lock_dt", servo.lock_dt), ("gate_s", servo.gate_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("servo.{name} must be > 0")));
            }
        }
        if !(servo.warmup_s >= 0.0 && servo.warmup_s.is_finite()) {
            return Err(Error::Validation("servo.warmup_s must be >= 0".into()));
        }
        servo.qll.validate()?;
        servo.scan.validate()?;

        let an = &self.analyzer;
        for (name, s) in [("spectrum", &an.spectrum), ("beatnote", &an.beatnote)] {
            s.validate()?;
            if matches!(s.span, Span::Zero { .. }) {
                return Err(Error::Validation(format!("analyzer.{name} needs a frequency span")));
            }
        }
        an.zero_span.validate()?;
        if !matches!(an.zero_span.span, Span::Zero { .. }) {
            return Err(Error::Validation("analyzer.zero_span needs mode = \"zero\"".into()));
        }

        for (i, mc) in self.mode_cleaners.iter().enumerate() {
            if !(mc.hwhm_hz > 0.0) {
                return Err(Error::Validation(format!("mode_cleaner[{i}].hwhm_hz must be > 0")));
            }
            if !mode_cleaner_resonance_check(mc, 0.0, self.opo.beat_hz)? {
                return Err(Error::Validation(format!(
                    "mode_cleaner[{i}] (fsr {} Hz) cannot transmit both twin beams {} Hz apart",
                    mc.fsr_hz, self.opo.beat_hz
                )));
            }
        }

        let needed = match run.name {
            ScenarioName::Beatnote => Some(("beatnote", an.beatnote.min_duration())),
            ScenarioName::IntensityDiff | ScenarioName::EntanglementReport => {
                Some(("spectrum", an.spectrum.min_duration()))
            }
            ScenarioName::PhaseSumScan => Some(("zero_span", 2.0 / an.zero_span.rbw_hz)),
            ScenarioName::Calibrate => None,
        };
        if let Some((which, need)) = needed {
            if run.duration_s < need {
                return Err(Error::Validation(format!(
                    "scenario.duration_s = {} s is shorter than the {need} s analyzer.{which} needs",
                    run.duration_s
                )));
            }
        }
        if run.name == ScenarioName::Calibrate && self.calibration.is_none() {
            return Err(Error::Validation("calibrate needs a [calibration] section".into()));
        }
        Ok(())
    }
}
