//! Welch power spectral density and the 40-entry band-power feature vector.
//!
//! Each channel's PSD is estimated from 1024-sample Hann segments at 50%
//! overlap (14 segments per 30 s epoch). The density is one-sided and scaled
//! by the window power, so integrating it over 0..fs/2 gives the mean square
//! of the signal. Band power is the integral of the linearly interpolated
//! density over the band; the integral is additive, so shared band edges are
//! split between neighbours and the five bands sum to the 0.1-40 Hz total.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::Epoch;
use crate::session::{BinaryState, Channel, EEG_SAMPLE_RATE_HZ};

pub const DEFAULT_NFFT: usize = 1024;

/// Relative power below this total is treated as undefined.
pub const DEGENERATE_POWER_UV2: f64 = 1e-12;

pub const FEATURE_COUNT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    /// Lower and upper edge in Hz.
    pub fn range_hz(self) -> (f64, f64) {
        match self {
            Band::Delta => (0.1, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 13.0),
            Band::Beta => (13.0, 30.0),
            Band::Gamma => (30.0, 40.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Span covered by the five bands.
pub const TOTAL_RANGE_HZ: (f64, f64) = (0.1, 40.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerKind {
    Absolute,
    Relative,
}

impl PowerKind {
    pub fn suffix(self) -> &'static str {
        match self {
            PowerKind::Absolute => "abs",
            PowerKind::Relative => "rel",
        }
    }
}

/// Position of a feature in the 40-entry vector: channel-major, then band, then kind.
pub fn feature_index(channel: Channel, band: Band, kind: PowerKind) -> usize {
    channel.index() * 10 + band.index() * 2 + kind as usize
}

pub fn feature_name(channel: Channel, band: Band, kind: PowerKind) -> String {
    format!("{}_{}_{}", channel.name(), band.name(), kind.suffix())
}

/// All 40 names in vector order, e.g. `TP9_delta_abs, TP9_delta_rel, ...`.
pub fn eeg_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for ch in Channel::ALL {
        for band in Band::ALL {
            for kind in [PowerKind::Absolute, PowerKind::Relative] {
                names.push(feature_name(ch, band, kind));
            }
        }
    }
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpectralError {
    #[error("signal of {len} samples is shorter than the {nfft}-point segment")]
    TooShort { len: usize, nfft: usize },
    #[error("segment length must be an even number of at least 2 samples, got {0}")]
    InvalidNfft(usize),
    #[error("total 0.1-40 Hz power {0:e} µV² is too small for relative power")]
    DegeneratePower(f64),
}

/// One-sided PSD in µV²/Hz on the grid `k * fs / nfft`, `k = 0..=nfft/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    pub density: Vec<f64>,
    pub sample_rate_hz: f64,
    pub nfft: usize,
    pub segments: usize,
}

impl PsdEstimate {
    pub fn resolution_hz(&self) -> f64 {
        self.sample_rate_hz / self.nfft as f64
    }

    /// Integral of the linearly interpolated density over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution_hz();
        let last = self.density.len() - 1;
        let lo = lo.max(0.0);
        let hi = hi.min(self.freqs_hz[last]);
        if hi <= lo {
            return 0.0;
        }
        let value_at = |f: f64| {
            let pos = f / df;
            let i = (pos.floor() as usize).min(last - 1);
            let t = pos - i as f64;
            self.density[i] * (1.0 - t) + self.density[i + 1] * t
        };
        let first = (lo / df).floor() as usize;
        let mut total = 0.0;
        for i in first..last {
            let a = lo.max(self.freqs_hz[i]);
            let b = hi.min(self.freqs_hz[i + 1]);
            if b <= a {
                if self.freqs_hz[i] >= hi {
                    break;
                }
                continue;
            }
            total += 0.5 * (b - a) * (value_at(a) + value_at(b));
        }
        total
    }

    pub fn total_power(&self) -> f64 {
        self.integrate(0.0, self.sample_rate_hz / 2.0)
    }
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch estimator with a planned FFT, reusable across signals.
#[derive(Clone)]
pub struct WelchEstimator {
    nfft: usize,
    sample_rate_hz: f64,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for WelchEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WelchEstimator")
            .field("nfft", &self.nfft)
            .field("sample_rate_hz", &self.sample_rate_hz)
            .finish()
    }
}

impl WelchEstimator {
    pub fn new(nfft: usize, sample_rate_hz: f64) -> Result<Self, SpectralError> {
        if nfft < 2 || nfft % 2 != 0 {
            return Err(SpectralError::InvalidNfft(nfft));
        }
        let window = hann(nfft);
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Ok(Self {
            nfft,
            sample_rate_hz,
            window,
            window_power,
            fft,
        })
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn estimate(&self, samples: &[f64]) -> Result<PsdEstimate, SpectralError> {
        let n = self.nfft;
        if samples.len() < n {
            return Err(SpectralError::TooShort { len: samples.len(), nfft: n });
        }
        let step = n / 2;
        let segments = (samples.len() - n) / step + 1;
        let bins = n / 2 + 1;
        let mut accum = vec![0.0; bins];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for s in 0..segments {
            let seg = &samples[s * step..s * step + n];
            for ((slot, &x), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *slot = Complex::new(x * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (acc, c) in accum.iter_mut().zip(&buf[..bins]) {
                *acc += c.norm_sqr();
            }
        }
        let scale = 1.0 / (self.sample_rate_hz * self.window_power * segments as f64);
        let density = accum
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let one_sided = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                p * scale * one_sided
            })
            .collect();
        let df = self.sample_rate_hz / n as f64;
        Ok(PsdEstimate {
            freqs_hz: (0..bins).map(|k| k as f64 * df).collect(),
            density,
            sample_rate_hz: self.sample_rate_hz,
            nfft: n,
            segments,
        })
    }
}

/// Welch PSD of a 256 Hz signal.
pub fn welch_psd(samples: &[f64], nfft: usize) -> Result<PsdEstimate, SpectralError> {
    WelchEstimator::new(nfft, EEG_SAMPLE_RATE_HZ)?.estimate(samples)
}

/// Band-integrated absolute power in µV².
pub fn band_power(psd: &PsdEstimate, band: Band) -> f64 {
    let (lo, hi) = band.range_hz();
    psd.integrate(lo, hi)
}

pub fn total_band_power(psd: &PsdEstimate) -> f64 {
    Band::ALL.iter().map(|&b| band_power(psd, b)).sum()
}

pub fn relative_band_power(psd: &PsdEstimate, band: Band) -> Result<f64, SpectralError> {
    let total = total_band_power(psd);
    if total <= DEGENERATE_POWER_UV2 {
        return Err(SpectralError::DegeneratePower(total));
    }
    Ok(band_power(psd, band) / total)
}

/// Absolute and relative band powers of one epoch, ordered as [`eeg_feature_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub interval_index: usize,
    pub state: BinaryState,
}

impl FeatureVector {
    pub fn get(&self, channel: Channel, band: Band, kind: PowerKind) -> f64 {
        self.values[feature_index(channel, band, kind)]
    }
}

/// Ten features (5 absolute, 5 relative) of one channel, interleaved per band.
pub fn channel_features(psd: &PsdEstimate) -> Result<[f64; 10], SpectralError> {
    let abs: [f64; 5] = std::array::from_fn(|b| band_power(psd, Band::ALL[b]));
    let total: f64 = abs.iter().sum();
    if total <= DEGENERATE_POWER_UV2 {
        return Err(SpectralError::DegeneratePower(total));
    }
    let mut out = [0.0; 10];
    for b in 0..5 {
        out[2 * b] = abs[b];
        out[2 * b + 1] = abs[b] / total;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    welch: WelchEstimator,
}

impl FeatureExtractor {
    pub fn new(nfft: usize) -> Result<Self, SpectralError> {
        Ok(Self {
            welch: WelchEstimator::new(nfft, EEG_SAMPLE_RATE_HZ)?,
        })
    }

    pub fn psd(&self, samples: &[f64]) -> Result<PsdEstimate, SpectralError> {
        self.welch.estimate(samples)
    }

    pub fn extract(&self, epoch: &Epoch) -> Result<FeatureVector, SpectralError> {
        let mut values = Vec::with_capacity(FEATURE_COUNT);
        for ch in &epoch.samples {
            values.extend(channel_features(&self.welch.estimate(ch)?)?);
        }
        Ok(FeatureVector {
            values,
            interval_index: epoch.interval_index,
            state: epoch.state,
        })
    }
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new(DEFAULT_NFFT).expect("default nfft is valid")
    }
}

/// Feature vector of one epoch with the default 1024-point estimator.
pub fn extract_features(epoch: &Epoch) -> Result<FeatureVector, SpectralError> {
    FeatureExtractor::default().extract(epoch)
}
