//! Spectrum-analyzer emulation.
//!
//! The resolution bandwidth is realized by choosing the segment length so
//! that the window's equivalent noise bandwidth equals `rbw_hz`. Detected
//! power from consecutive segments passes through a first-order video
//! filter of bandwidth `vbw_hz`. PSD values are two-sided and normalized to
//! the sample rate, so unit-variance white noise reads 1 (the SNL).

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
    Blackman,
}

impl Window {
    /// Periodic (DFT-even) window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (0..n)
            .map(|i| {
                let x = TAU * i as f64 / nf;
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
                }
            })
            .collect()
    }

    /// Analytic equivalent noise bandwidth in bins.
    pub fn enbw_bins(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 1.5,
            Window::Blackman => (0.42f64.powi(2) + 0.5f64.powi(2) / 2.0 + 0.08f64.powi(2) / 2.0) / 0.42f64.powi(2),
        }
    }
}

/// ENBW in bins of a sampled window, `N Σw² / (Σw)²`.
pub fn measured_enbw_bins(w: &[f64]) -> f64 {
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    w.len() as f64 * s2 / (s1 * s1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Span {
    Range { start_hz: f64, stop_hz: f64 },
    Zero { center_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSettings {
    pub rbw_hz: f64,
    /// Video bandwidth; `f64::INFINITY` disables smoothing.
    pub vbw_hz: f64,
    pub span: Span,
    pub averages: usize,
    #[serde(default)]
    pub window: Window,
}

impl AnalyzerSettings {
    pub fn new(rbw_hz: f64, vbw_hz: f64, span: Span, averages: usize) -> Self {
        Self {
            rbw_hz,
            vbw_hz,
            span,
            averages,
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rbw_hz > 0.0 && self.rbw_hz.is_finite()) {
            return Err(Error::Validation(format!("rbw_hz must be > 0, got {}", self.rbw_hz)));
        }
        if !(self.vbw_hz > 0.0) {
            return Err(Error::Validation(format!("vbw_hz must be > 0, got {}", self.vbw_hz)));
        }
        if self.averages < 1 {
            return Err(Error::Validation("averages must be >= 1".into()));
        }
        match self.span {
            Span::Range { start_hz, stop_hz } if !(stop_hz > start_hz) => Err(Error::Validation(format!(
                "span stop {stop_hz} must exceed start {start_hz}"
            ))),
            Span::Zero { center_hz } if !center_hz.is_finite() => {
                Err(Error::Validation("zero span needs a finite center frequency".into()))
            }
            _ => Ok(()),
        }
    }

    /// Segment length whose window ENBW equals the RBW at sample rate `fs`.
    pub fn segment_len(&self, fs: f64) -> usize {
        ((self.window.enbw_bins() * fs / self.rbw_hz).round() as usize).max(2)
    }

    /// Shortest trace accepted for `averages` sweeps.
    pub fn min_duration(&self) -> f64 {
        2.0 * self.averages as f64 / self.rbw_hz
    }

    fn video_alpha(&self, hop_s: f64) -> f64 {
        if self.vbw_hz.is_infinite() {
            1.0
        } else {
            1.0 - (-TAU * self.vbw_hz * hop_s).exp()
        }
    }
}

/// PSD on a frequency grid, normalized to the shot-noise limit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseSpectrum {
    pub freq_hz: Vec<f64>,
    /// Linear power, SNL = 1.
    pub psd: Vec<f64>,
    /// Reference trace the values were normalized by, if any.
    pub snl_reference: Option<Vec<f64>>,
    /// Detection floor in the same units as `psd`.
    pub floor_psd: Option<f64>,
}

impl NoiseSpectrum {
    pub fn new(freq_hz: Vec<f64>, psd: Vec<f64>) -> Self {
        Self {
            freq_hz,
            psd,
            snl_reference: None,
            floor_psd: None,
        }
    }

    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    pub fn db_rel_snl(&self) -> Vec<f64> {
        self.psd.iter().map(|p| 10.0 * p.log10()).collect()
    }

    /// Points within 3 dB of the detection floor.
    pub fn below_floor(&self) -> Vec<bool> {
        match self.floor_psd {
            Some(floor) => self.psd.iter().map(|&p| p <= 2.0 * floor).collect(),
            None => vec![false; self.psd.len()],
        }
    }

    /// Mean PSD over `lo ≤ f ≤ hi`.
    pub fn band_mean(&self, lo_hz: f64, hi_hz: f64) -> Option<f64> {
        let (sum, n) = self
            .freq_hz
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Mean PSD of the bins within `half_width_hz` of `f`, or the nearest bin.
    pub fn level_at(&self, freq_hz: f64, half_width_hz: f64) -> Option<f64> {
        self.band_mean(freq_hz - half_width_hz, freq_hz + half_width_hz)
            .or_else(|| {
                self.freq_hz
                    .iter()
                    .zip(&self.psd)
                    .min_by(|a, b| (a.0 - freq_hz).abs().total_cmp(&(b.0 - freq_hz).abs()))
                    .map(|(_, p)| *p)
            })
    }
}

struct Segmenter {
    len: usize,
    hop: usize,
    window: Vec<f64>,
    norm: f64,
    fft: Arc<dyn Fft<f64>>,
    alpha: f64,
}

impl Segmenter {
    fn new(fs: f64, settings: &AnalyzerSettings) -> Self {
        let len = settings.segment_len(fs);
        let hop = (len / 2).max(1);
        let window = settings.window.coefficients(len);
        let norm = 1.0 / window.iter().map(|w| w * w).sum::<f64>();
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self {
            len,
            hop,
            window,
            norm,
            fft,
            alpha: settings.video_alpha(hop as f64 / fs),
        }
    }

    fn count(&self, n: usize) -> usize {
        if n < self.len {
            0
        } else {
            (n - self.len) / self.hop + 1
        }
    }

    /// Video-filtered periodograms, summed into `acc`; returns the count.
    fn accumulate<F>(&self, n: usize, fill: F, acc: &mut [f64]) -> usize
    where
        F: Fn(usize, &mut [Complex64]),
    {
        let segments = self.count(n);
        let mut buf = vec![Complex64::default(); self.len];
        let mut video = vec![0.0; acc.len()];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        for s in 0..segments {
            fill(s * self.hop, &mut buf);
            for (z, w) in buf.iter_mut().zip(&self.window) {
                *z *= w;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, v) in video.iter_mut().enumerate() {
                let p = buf[k].norm_sqr() * self.norm;
                *v = if s == 0 { p } else { *v + self.alpha * (p - *v) };
            }
            for (a, v) in acc.iter_mut().zip(&video) {
                *a += v;
            }
        }
        segments
    }
}

fn check_duration(n: usize, fs: f64, settings: &AnalyzerSettings) -> Result<()> {
    let have = n as f64 / fs;
    let need = settings.min_duration();
    if have < need * (1.0 - 1e-12) {
        return Err(Error::InsufficientSamples {
            have_s: have,
            need_s: need,
        });
    }
    Ok(())
}

/// Averaged PSD over one or more real traces sampled at `fs`.
#[derive(Clone)]
pub struct WelchEstimator {
    fs: f64,
    settings: AnalyzerSettings,
    acc: Vec<f64>,
    segments: usize,
    len: usize,
}

impl WelchEstimator {
    pub fn new(fs: f64, settings: &AnalyzerSettings) -> Result<Self> {
        settings.validate()?;
        if let Span::Zero { .. } = settings.span {
            return Err(Error::Validation("welch estimate needs a frequency span".into()));
        }
        let len = settings.segment_len(fs);
        Ok(Self {
            fs,
            settings: *settings,
            acc: vec![0.0; len / 2 + 1],
            segments: 0,
            len,
        })
    }

    pub fn segment_len(&self) -> usize {
        self.len
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn accumulate(&mut self, trace: &[f64]) -> Result<()> {
        check_duration(trace.len(), self.fs, &self.settings)?;
        let seg = Segmenter::new(self.fs, &self.settings);
        self.segments += seg.accumulate(
            trace.len(),
            |start, buf| {
                for (z, x) in buf.iter_mut().zip(&trace[start..]) {
                    *z = Complex64::new(*x, 0.0);
                }
            },
            &mut self.acc,
        );
        Ok(())
    }

    /// Merge an estimator built with identical settings.
    pub fn merge(&mut self, other: &WelchEstimator) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            *a += b;
        }
        self.segments += other.segments;
    }

    pub fn finish(&self) -> NoiseSpectrum {
        let df = self.fs / self.len as f64;
        let scale = 1.0 / self.segments.max(1) as f64;
        let (lo, hi) = match self.settings.span {
            Span::Range { start_hz, stop_hz } => (start_hz, stop_hz),
            Span::Zero { .. } => unreachable!(),
        };
        let (freq, psd) = self
            .acc
            .iter()
            .enumerate()
            .map(|(k, a)| (k as f64 * df, a * scale))
            .filter(|(f, _)| *f >= lo && *f <= hi)
            .unzip();
        NoiseSpectrum::new(freq, psd)
    }
}

/// Welch PSD of one real trace.
pub fn welch_psd(trace: &[f64], fs: f64, settings: &AnalyzerSettings) -> Result<NoiseSpectrum> {
    let mut est = WelchEstimator::new(fs, settings)?;
    est.accumulate(trace)?;
    Ok(est.finish())
}

/// Two-sided Welch PSD of a complex envelope; frequencies are offsets from
/// the carrier, ascending.
pub fn welch_psd_complex(envelope: &[Complex64], fs: f64, settings: &AnalyzerSettings) -> Result<NoiseSpectrum> {
    settings.validate()?;
    check_duration(envelope.len(), fs, settings)?;
    let seg = Segmenter::new(fs, settings);
    let n = seg.len;
    let mut acc = vec![0.0; n];
    let segments = seg.accumulate(
        envelope.len(),
        |start, buf| buf.copy_from_slice(&envelope[start..start + n]),
        &mut acc,
    );
    let df = fs / n as f64;
    let (lo, hi) = match settings.span {
        Span::Range { start_hz, stop_hz } => (start_hz, stop_hz),
        Span::Zero { center_hz } => (center_hz, center_hz),
    };
    let mut pts: Vec<(f64, f64)> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let kk = if k <= (n - 1) / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            (kk * df, a / segments as f64)
        })
        .filter(|(f, _)| *f >= lo && *f <= hi)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (freq, psd) = pts.into_iter().unzip();
    Ok(NoiseSpectrum::new(freq, psd))
}

/// Zero-span power versus time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroSpanTrace {
    pub time_s: Vec<f64>,
    /// Power in the resolution bandwidth, PSD units (SNL = 1).
    pub power: Vec<f64>,
    /// Sample index at the center of each analysis window.
    pub center_index: Vec<usize>,
}

/// Detected power in `rbw_hz` around `center_hz`, stepped by half a window
/// and smoothed by the video filter.
pub fn zero_span(trace: &[f64], fs: f64, center_hz: f64, settings: &AnalyzerSettings) -> Result<ZeroSpanTrace> {
    settings.validate()?;
    let nyquist = 0.5 * fs;
    if !(center_hz >= 0.0 && center_hz <= nyquist) {
        return Err(Error::OutOfRange {
            freq_hz: center_hz,
            nyquist_hz: nyquist,
        });
    }
    let seg = Segmenter::new(fs, settings);
    let n = seg.len;
    if trace.len() < n {
        return Err(Error::InsufficientSamples {
            have_s: trace.len() as f64 / fs,
            need_s: n as f64 / fs,
        });
    }
    let kernel: Vec<Complex64> = seg
        .window
        .iter()
        .enumerate()
        .map(|(i, w)| Complex64::from_polar(*w, -TAU * center_hz * i as f64 / fs))
        .collect();
    let count = seg.count(trace.len());
    let mut out = ZeroSpanTrace::default();
    let mut video = 0.0;
    for s in 0..count {
        let start = s * seg.hop;
        let z: Complex64 = kernel.iter().zip(&trace[start..start + n]).map(|(k, x)| k * x).sum();
        let p = z.norm_sqr() * seg.norm;
        video = if s == 0 { p } else { video + seg.alpha * (p - video) };
        let center = start + n / 2;
        out.time_s.push(center as f64 / fs);
        out.power.push(video);
        out.center_index.push(center);
    }
    Ok(out)
}

/// Pointwise ratio to an SNL reference on an identical grid.
pub fn relative_to_snl(signal: &NoiseSpectrum, snl: &NoiseSpectrum) -> Result<NoiseSpectrum> {
    let same_grid = signal.freq_hz.len() == snl.freq_hz.len()
        && signal
            .freq_hz
            .iter()
            .zip(&snl.freq_hz)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
    if !same_grid {
        return Err(Error::GridMismatch);
    }
    let psd = signal.psd.iter().zip(&snl.psd).map(|(s, r)| s / r).collect();
    let mean_snl = snl.psd.iter().sum::<f64>() / snl.psd.len().max(1) as f64;
    Ok(NoiseSpectrum {
        freq_hz: signal.freq_hz.clone(),
        psd,
        snl_reference: Some(snl.psd.clone()),
        floor_psd: signal.floor_psd.map(|f| f / mean_snl),
    })
}
