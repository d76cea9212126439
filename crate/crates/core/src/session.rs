//! Session domain types: the EEG recording, vehicle telemetry, the observer
//! rating track, and the rule that turns three observer ratings into a binary
//! alert/drowsy state.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Headset sampling rate. Recordings at any other rate are rejected.
pub const EEG_SAMPLE_RATE_HZ: f64 = 256.0;

/// Length of one observer-rating interval, and of one EEG epoch.
pub const ORD_INTERVAL_S: f64 = 30.0;

/// Samples per channel in one 30 s epoch at 256 Hz.
pub const EPOCH_SAMPLES: usize = 7680;

/// Lowest and highest observer rating.
pub const MIN_RATING: u8 = 1;
pub const MAX_RATING: u8 = 5;

/// Headset electrodes, in recording order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    TP9,
    AF7,
    AF8,
    TP10,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::TP9, Channel::AF7, Channel::AF8, Channel::TP10];

    pub fn name(self) -> &'static str {
        match self {
            Channel::TP9 => "TP9",
            Channel::AF7 => "AF7",
            Channel::AF8 => "AF8",
            Channel::TP10 => "TP10",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Channel names in the order every recording must carry them.
pub fn channel_names() -> Vec<String> {
    Channel::ALL.iter().map(|c| c.name().to_string()).collect()
}

/// Binarized drowsiness state of one rating interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryState {
    Alert,
    Drowsy,
}

impl BinaryState {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryState::Alert => "alert",
            BinaryState::Drowsy => "drowsy",
        }
    }

    pub fn from_rating(level: u8) -> Result<Self, InvalidRating> {
        match level {
            1 | 2 => Ok(BinaryState::Alert),
            3..=5 => Ok(BinaryState::Drowsy),
            other => Err(InvalidRating(other as i64)),
        }
    }
}

impl fmt::Display for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BinaryState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alert" => Ok(BinaryState::Alert),
            "drowsy" => Ok(BinaryState::Drowsy),
            other => Err(format!("unknown state `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("observer rating {0} is outside 1..=5")]
pub struct InvalidRating(pub i64);

/// Reduces three observer ratings to a binary state.
///
/// The vote is the median of the three ratings, which is then binarized:
/// levels 1-2 are alert, levels 3-5 are drowsy.
pub fn majority_label(ratings: [u8; 3]) -> Result<BinaryState, InvalidRating> {
    if let Some(&bad) = ratings
        .iter()
        .find(|&&r| !(MIN_RATING..=MAX_RATING).contains(&r))
    {
        return Err(InvalidRating(bad as i64));
    }
    let mut sorted = ratings;
    sorted.sort_unstable();
    BinaryState::from_rating(sorted[1])
}

/// Four-channel EEG recording in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub channel_names: Vec<String>,
    pub sample_rate_hz: f64,
    /// One sequence per channel, all the same length.
    pub samples: Vec<Vec<f64>>,
    /// Offset of the first sample on the session clock.
    pub start_time_s: f64,
}

impl EegRecording {
    /// Builds a recording with the fixed headset layout and rate.
    pub fn new(samples: [Vec<f64>; 4], start_time_s: f64) -> Self {
        Self {
            channel_names: channel_names(),
            sample_rate_hz: EEG_SAMPLE_RATE_HZ,
            samples: samples.into(),
            start_time_s,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        if self.sample_rate_hz > 0.0 {
            self.len() as f64 / self.sample_rate_hz
        } else {
            0.0
        }
    }
}

/// The four telemetry signals, in export order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleSignal {
    SteerAngle,
    SteerSpeed,
    LaneDeviation,
    Torque,
}

impl VehicleSignal {
    pub const ALL: [VehicleSignal; 4] = [
        VehicleSignal::SteerAngle,
        VehicleSignal::SteerSpeed,
        VehicleSignal::LaneDeviation,
        VehicleSignal::Torque,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VehicleSignal::SteerAngle => "steer_angle",
            VehicleSignal::SteerSpeed => "steer_speed",
            VehicleSignal::LaneDeviation => "lane_deviation",
            VehicleSignal::Torque => "torque",
        }
    }
}

/// Simulator telemetry. The telemetry clock is independent of the EEG clock.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTelemetry {
    pub sample_rate_hz: f64,
    /// Degrees.
    pub steer_angle: Vec<f64>,
    /// Degrees per second.
    pub steer_speed: Vec<f64>,
    /// Meters.
    pub lane_deviation: Vec<f64>,
    /// Newton-meters.
    pub torque: Vec<f64>,
    pub start_time_s: f64,
}

impl VehicleTelemetry {
    pub fn series(&self, signal: VehicleSignal) -> &[f64] {
        match signal {
            VehicleSignal::SteerAngle => &self.steer_angle,
            VehicleSignal::SteerSpeed => &self.steer_speed,
            VehicleSignal::LaneDeviation => &self.lane_deviation,
            VehicleSignal::Torque => &self.torque,
        }
    }

    pub fn len(&self) -> usize {
        self.steer_angle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Session-clock time of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time_s + i as f64 / self.sample_rate_hz
    }
}

/// Three observer ratings for one 30 s interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrdInterval {
    pub index: usize,
    pub ratings: [u8; 3],
}

impl OrdInterval {
    pub fn state(&self) -> Result<BinaryState, InvalidRating> {
        majority_label(self.ratings)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrdLabelTrack {
    pub interval_seconds: f64,
    pub intervals: Vec<OrdInterval>,
}

impl OrdLabelTrack {
    pub fn new(intervals: Vec<OrdInterval>) -> Self {
        Self {
            interval_seconds: ORD_INTERVAL_S,
            intervals,
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub eeg: EegRecording,
    pub telemetry: Option<VehicleTelemetry>,
    pub labels: OrdLabelTrack,
}

/// Machine-readable code of one invariant violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    WrongChannelCount,
    WrongChannelNames,
    WrongSampleRate,
    ChannelLengthMismatch,
    TelemetryLengthMismatch,
    TelemetryBadRate,
    NonContiguousIntervals,
    InvalidRating,
    WrongIntervalLength,
    CoverageMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, detail: impl Into<String>) {
        self.violations.push(Violation {
            code,
            detail: detail.into(),
        });
    }
}

/// Lists every invariant the session breaks. An empty report means valid.
pub fn validate_session(session: &Session) -> ValidationReport {
    let mut report = ValidationReport::default();
    let eeg = &session.eeg;

    if eeg.samples.len() != 4 || eeg.channel_names.len() != 4 {
        report.push(
            ViolationCode::WrongChannelCount,
            format!(
                "expected 4 channels, found {} names and {} sample series",
                eeg.channel_names.len(),
                eeg.samples.len()
            ),
        );
    } else if eeg.channel_names != channel_names() {
        report.push(
            ViolationCode::WrongChannelNames,
            format!("expected [TP9, AF7, AF8, TP10], found {:?}", eeg.channel_names),
        );
    }
    if eeg.sample_rate_hz != EEG_SAMPLE_RATE_HZ {
        report.push(
            ViolationCode::WrongSampleRate,
            format!("expected 256 Hz, found {} Hz", eeg.sample_rate_hz),
        );
    }
    if let Some(first) = eeg.samples.first() {
        if eeg.samples.iter().any(|c| c.len() != first.len()) {
            let lens: Vec<usize> = eeg.samples.iter().map(Vec::len).collect();
            report.push(
                ViolationCode::ChannelLengthMismatch,
                format!("channel lengths differ: {lens:?}"),
            );
        }
    }

    if let Some(tel) = &session.telemetry {
        if !(tel.sample_rate_hz > 0.0 && tel.sample_rate_hz.is_finite()) {
            report.push(
                ViolationCode::TelemetryBadRate,
                format!("telemetry rate {} Hz is not positive", tel.sample_rate_hz),
            );
        }
        let n = tel.steer_angle.len();
        if [&tel.steer_speed, &tel.lane_deviation, &tel.torque]
            .iter()
            .any(|s| s.len() != n)
        {
            report.push(
                ViolationCode::TelemetryLengthMismatch,
                "telemetry series lengths differ",
            );
        }
    }

    let labels = &session.labels;
    if labels.interval_seconds != ORD_INTERVAL_S {
        report.push(
            ViolationCode::WrongIntervalLength,
            format!("expected 30 s intervals, found {} s", labels.interval_seconds),
        );
    }
    for (expected, interval) in labels.intervals.iter().enumerate() {
        if interval.index != expected {
            report.push(
                ViolationCode::NonContiguousIntervals,
                format!("interval {} found where {expected} was expected", interval.index),
            );
            break;
        }
    }
    for interval in &labels.intervals {
        if let Some(r) = interval
            .ratings
            .iter()
            .find(|r| !(MIN_RATING..=MAX_RATING).contains(r))
        {
            report.push(
                ViolationCode::InvalidRating,
                format!("interval {} has rating {r}", interval.index),
            );
        }
    }

    let covered = labels.len() as f64 * labels.interval_seconds;
    if covered > eeg.duration_s() + labels.interval_seconds {
        report.push(
            ViolationCode::CoverageMismatch,
            format!(
                "labels cover {covered} s but EEG lasts {:.3} s",
                eeg.duration_s()
            ),
        );
    }

    report
}
