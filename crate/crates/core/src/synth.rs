//! Seeded generator of synthetic sessions with known band powers and
//! controllable alert/drowsy effects.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{
    EegRecording, OrdInterval, OrdLabelTrack, Session, VehicleTelemetry, EEG_SAMPLE_RATE_HZ,
    EPOCH_SAMPLES, ORD_INTERVAL_S,
};
use crate::spectral::Band;

/// Keeps comb tones away from band edges so Welch leakage stays in-band.
pub const EDGE_MARGIN_HZ: f64 = 0.75;

/// Highest comb tone, inside the low-pass passband.
pub const MAX_TONE_HZ: f64 = 37.5;

/// Peak of an injected artifact burst.
pub const BURST_AMPLITUDE_UV: f64 = 300.0;
pub const BURST_FREQ_HZ: f64 = 5.0;

/// Share of a 300 µV sine's samples that exceed 70 µV.
const BURST_OUTLIER_SHARE: f64 = 0.85;

pub const ALERT_RATINGS: [u8; 3] = [1, 1, 1];
pub const DROWSY_RATINGS: [u8; 3] = [4, 4, 4];

/// One value per frequency band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandAmplitudes {
    pub delta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BandAmplitudes {
    pub const fn uniform(v: f64) -> Self {
        Self {
            delta: v,
            theta: v,
            alpha: v,
            beta: v,
            gamma: v,
        }
    }

    pub fn get(&self, band: Band) -> f64 {
        match band {
            Band::Delta => self.delta,
            Band::Theta => self.theta,
            Band::Alpha => self.alpha,
            Band::Beta => self.beta,
            Band::Gamma => self.gamma,
        }
    }

    pub fn set(&mut self, band: Band, v: f64) {
        match band {
            Band::Delta => self.delta = v,
            Band::Theta => self.theta = v,
            Band::Alpha => self.alpha = v,
            Band::Beta => self.beta = v,
            Band::Gamma => self.gamma = v,
        }
    }

    fn values(&self) -> [f64; 5] {
        Band::ALL.map(|b| self.get(b))
    }
}

impl Default for BandAmplitudes {
    /// Baseline RMS amplitudes in µV.
    fn default() -> Self {
        Self {
            delta: 12.0,
            theta: 7.0,
            alpha: 9.0,
            beta: 5.0,
            gamma: 2.5,
        }
    }
}

/// One telemetry signal: `mean + drowsy_shift·[drowsy] + interval offset + sample noise`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSpec {
    pub mean: f64,
    pub drowsy_shift: f64,
    /// Standard deviation of the per-interval offset.
    pub interval_sd: f64,
    /// Standard deviation of the per-sample noise.
    pub sample_sd: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            mean: 0.0,
            drowsy_shift: 0.0,
            interval_sd: 1.0,
            sample_sd: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSpec {
    pub sample_rate_hz: f64,
    pub steer_angle: SignalSpec,
    pub steer_speed: SignalSpec,
    pub lane_deviation: SignalSpec,
    pub torque: SignalSpec,
}

impl VehicleSpec {
    fn signals(&self) -> [&SignalSpec; 4] {
        [&self.steer_angle, &self.steer_speed, &self.lane_deviation, &self.torque]
    }
}

impl Default for VehicleSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 50.0,
            steer_angle: SignalSpec { mean: 0.0, drowsy_shift: 0.0, interval_sd: 2.0, sample_sd: 5.0 },
            steer_speed: SignalSpec { mean: 10.0, drowsy_shift: 0.0, interval_sd: 2.0, sample_sd: 5.0 },
            lane_deviation: SignalSpec { mean: 0.3, drowsy_shift: 0.0, interval_sd: 0.1, sample_sd: 0.05 },
            torque: SignalSpec { mean: 0.0, drowsy_shift: 0.0, interval_sd: 0.5, sample_sd: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_intervals: usize,
    /// Share of intervals rated drowsy; alert intervals come first.
    pub drowsy_fraction: f64,
    /// Amplitude factors applied in drowsy epochs.
    pub drowsy_multipliers: BandAmplitudes,
    /// Per-channel band RMS amplitudes in µV, in TP9, AF7, AF8, TP10 order.
    pub baseline_uv: [BandAmplitudes; 4],
    /// Log-scale standard deviation of each epoch's band amplitudes.
    pub amplitude_jitter: f64,
    /// RMS of the white noise added to every sample, in µV.
    pub noise_floor_uv: f64,
    /// Fraction of a contaminated epoch's samples pushed beyond 70 µV.
    pub outlier_rate: f64,
    /// Probability that an epoch is contaminated when `outlier_rate > 0`.
    pub artifact_probability: f64,
    /// `None` generates a session without telemetry.
    pub vehicle: Option<VehicleSpec>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_intervals: 40,
            drowsy_fraction: 0.5,
            drowsy_multipliers: BandAmplitudes::uniform(1.0),
            baseline_uv: [BandAmplitudes::default(); 4],
            amplitude_jitter: 0.2,
            noise_floor_uv: 1.0,
            outlier_rate: 0.0,
            artifact_probability: 1.0,
            vehicle: Some(VehicleSpec::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid synth spec: {0}")]
pub struct InvalidSpec(pub String);

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), InvalidSpec> {
    if ok { Ok(()) } else { Err(InvalidSpec(what())) }
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

fn non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), InvalidSpec> {
        check(self.n_intervals > 0, || "n_intervals must be positive".into())?;
        check(unit(self.drowsy_fraction), || format!("drowsy_fraction {} outside [0, 1]", self.drowsy_fraction))?;
        for band in Band::ALL {
            let m = self.drowsy_multipliers.get(band);
            check(m.is_finite() && m > 0.0, || format!("{} multiplier {m} must be positive", band.name()))?;
            for (c, base) in self.baseline_uv.iter().enumerate() {
                let a = base.get(band);
                check(non_negative(a), || format!("baseline {} of channel {c} is {a}", band.name()))?;
            }
        }
        check(non_negative(self.amplitude_jitter), || "amplitude_jitter must be non-negative".into())?;
        check(non_negative(self.noise_floor_uv), || "noise_floor_uv must be non-negative".into())?;
        check(unit(self.outlier_rate), || format!("outlier_rate {} outside [0, 1]", self.outlier_rate))?;
        check(unit(self.artifact_probability), || {
            format!("artifact_probability {} outside [0, 1]", self.artifact_probability)
        })?;
        if let Some(v) = &self.vehicle {
            check(v.sample_rate_hz.is_finite() && v.sample_rate_hz > 0.0, || {
                "vehicle sample_rate_hz must be positive".into()
            })?;
            for s in v.signals() {
                check(s.mean.is_finite() && s.drowsy_shift.is_finite(), || "vehicle means must be finite".into())?;
                check(non_negative(s.interval_sd) && non_negative(s.sample_sd), || {
                    "vehicle deviations must be non-negative".into()
                })?;
            }
        }
        Ok(())
    }

    /// Count of alert intervals; the rest are drowsy.
    pub fn alert_intervals(&self) -> usize {
        (self.n_intervals as f64 * (1.0 - self.drowsy_fraction)).round() as usize
    }

    /// Expected absolute band power (µV²) of an alert epoch on `channel`, noise floor included.
    pub fn expected_band_power(&self, channel: usize, band: Band) -> f64 {
        let a = self.baseline_uv[channel].get(band);
        let (lo, hi) = band.range_hz();
        a * a * (2.0 * self.amplitude_jitter.powi(2)).exp()
            + self.noise_floor_uv.powi(2) * (hi - lo) / (EEG_SAMPLE_RATE_HZ / 2.0)
    }
}

/// FFT bins of the comb tones for each band.
fn comb_bins() -> [Vec<usize>; 5] {
    let df = 1.0 / ORD_INTERVAL_S;
    Band::ALL.map(|band| {
        let (lo, hi) = band.range_hz();
        let first = ((lo + EDGE_MARGIN_HZ) / df).ceil() as usize;
        let last = ((hi - EDGE_MARGIN_HZ).min(MAX_TONE_HZ) / df).floor() as usize;
        (first..=last).collect()
    })
}

struct EegSynth {
    bins: [Vec<usize>; 5],
    ifft: Arc<dyn Fft<f64>>,
}

impl EegSynth {
    fn new() -> Self {
        Self {
            bins: comb_bins(),
            ifft: FftPlanner::new().plan_fft_inverse(EPOCH_SAMPLES),
        }
    }

    /// One channel of one epoch: a random-phase comb per band where band
    /// `b` carries RMS amplitude `amps[b]`, plus white noise.
    fn channel(&self, amps: [f64; 5], noise_uv: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut spectrum = vec![Complex::new(0.0, 0.0); EPOCH_SAMPLES];
        for (bins, amp) in self.bins.iter().zip(amps) {
            // K tones of amplitude a carry K·a²/2 of power
            let a = amp * (2.0 / bins.len() as f64).sqrt();
            for &k in bins {
                let phase = rng.random::<f64>() * 2.0 * PI;
                spectrum[k] = Complex::from_polar(a, phase);
            }
        }
        self.ifft.process(&mut spectrum);
        spectrum
            .iter()
            .map(|z| z.re + noise_uv * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

fn add_burst(channels: &mut [Vec<f64>; 4], rate: f64, rng: &mut ChaCha8Rng) {
    let len = ((rate / BURST_OUTLIER_SHARE).min(1.0) * EPOCH_SAMPLES as f64).round() as usize;
    let start = rng.random_range(0..=EPOCH_SAMPLES - len);
    let phase = rng.random::<f64>() * 2.0 * PI;
    for ch in channels.iter_mut() {
        for (i, x) in ch[start..start + len].iter_mut().enumerate() {
            let t = i as f64 / EEG_SAMPLE_RATE_HZ;
            *x += BURST_AMPLITUDE_UV * (2.0 * PI * BURST_FREQ_HZ * t + phase).sin();
        }
    }
}

fn telemetry(spec: &VehicleSpec, states: &[bool], rng: &mut ChaCha8Rng) -> VehicleTelemetry {
    let per_interval = (spec.sample_rate_hz * ORD_INTERVAL_S).round() as usize;
    let n = per_interval * states.len();
    let mut series: [Vec<f64>; 4] = Default::default();
    for s in &mut series {
        s.reserve(n);
    }
    for &drowsy in states {
        let levels = spec.signals().map(|s| {
            let shift = if drowsy { s.drowsy_shift } else { 0.0 };
            s.mean + shift + s.interval_sd * rng.sample::<f64, _>(StandardNormal)
        });
        for _ in 0..per_interval {
            for ((out, sig), level) in series.iter_mut().zip(spec.signals()).zip(levels) {
                out.push(level + sig.sample_sd * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    let [steer_angle, steer_speed, lane_deviation, torque] = series;
    VehicleTelemetry {
        sample_rate_hz: spec.sample_rate_hz,
        steer_angle,
        steer_speed,
        lane_deviation,
        torque,
        start_time_s: 0.0,
    }
}

pub fn session_id(seed: u64) -> String {
    format!("synth-{seed}")
}

/// Generates one session; the output is a pure function of `(spec, seed)`.
pub fn generate_session(spec: &SynthSpec, seed: u64) -> Result<Session, InvalidSpec> {
    spec.validate()?;
    let n_alert = spec.alert_intervals();
    let states: Vec<bool> = (0..spec.n_intervals).map(|k| k >= n_alert).collect();

    let mut eeg_rng = ChaCha8Rng::seed_from_u64(seed);
    let synth = EegSynth::new();
    let mut channels: [Vec<f64>; 4] = Default::default();
    for ch in &mut channels {
        ch.reserve(spec.n_intervals * EPOCH_SAMPLES);
    }
    for &drowsy in &states {
        let mut epoch: [Vec<f64>; 4] = Default::default();
        for (c, out) in epoch.iter_mut().enumerate() {
            let base = spec.baseline_uv[c].values();
            let mult = spec.drowsy_multipliers.values();
            let amps: [f64; 5] = std::array::from_fn(|b| {
                let m = if drowsy { mult[b] } else { 1.0 };
                let jitter = (spec.amplitude_jitter * eeg_rng.sample::<f64, _>(StandardNormal)).exp();
                base[b] * m * jitter
            });
            *out = synth.channel(amps, spec.noise_floor_uv, &mut eeg_rng);
        }
        if spec.outlier_rate > 0.0 && eeg_rng.random::<f64>() < spec.artifact_probability {
            add_burst(&mut epoch, spec.outlier_rate, &mut eeg_rng);
        }
        for (out, part) in channels.iter_mut().zip(epoch) {
            out.extend(part);
        }
    }

    let telemetry = spec.vehicle.as_ref().map(|v| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        telemetry(v, &states, &mut rng)
    });
    let intervals = states
        .iter()
        .enumerate()
        .map(|(index, &drowsy)| OrdInterval {
            index,
            ratings: if drowsy { DROWSY_RATINGS } else { ALERT_RATINGS },
        })
        .collect();
    Ok(Session {
        id: session_id(seed),
        eeg: EegRecording::new(channels, 0.0),
        telemetry,
        labels: OrdLabelTrack::new(intervals),
    })
}
