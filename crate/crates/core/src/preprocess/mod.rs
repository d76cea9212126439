//! EEG preprocessing: epoching to rating intervals, band-limiting, artifact
//! rejection, and the pre/post denoising tally.

mod fir;

pub use fir::{
    design_fir, filter_direct, tap_count, DesignError, FilterKernel, FilterKind, FirConvolver,
    HAMMING_TRANSITION_FACTOR,
};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{BinaryState, EegRecording, OrdLabelTrack, EEG_SAMPLE_RATE_HZ, EPOCH_SAMPLES};

/// One 30 s, four-channel EEG segment aligned to a rating interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub interval_index: usize,
    pub state: BinaryState,
    pub samples: [Vec<f64>; 4],
    pub filtered: bool,
}

/// Epochs that survived artifact rejection, plus the rejected ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochSet {
    pub epochs: Vec<Epoch>,
    /// `(interval_index, outlier_fraction)` of every rejected epoch.
    pub dropped: Vec<(usize, f64)>,
    /// States of the rejected epochs, parallel to `dropped`.
    pub dropped_states: Vec<BinaryState>,
}

/// Epoching result. `skipped` counts label intervals the recording does not fully cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoching {
    pub epochs: Vec<Epoch>,
    pub skipped: usize,
}

/// Cuts the recording into one epoch per fully covered label interval.
///
/// Interval k spans `[30k, 30(k+1))` s on the session clock. Trailing samples
/// not filling an interval are discarded. Intervals whose ratings are invalid
/// are skipped like uncovered ones.
pub fn epoch_signal(recording: &EegRecording, labels: &OrdLabelTrack) -> Epoching {
    let offset = (recording.start_time_s * EEG_SAMPLE_RATE_HZ).round() as i64;
    let len = recording.len() as i64;
    let mut epochs = Vec::new();
    let mut skipped = 0;
    for interval in &labels.intervals {
        let start = interval.index as i64 * EPOCH_SAMPLES as i64 - offset;
        let end = start + EPOCH_SAMPLES as i64;
        let state = match interval.state() {
            Ok(s) if start >= 0 && end <= len => s,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let (start, end) = (start as usize, end as usize);
        epochs.push(Epoch {
            interval_index: interval.index,
            state,
            samples: std::array::from_fn(|c| recording.samples[c][start..end].to_vec()),
            filtered: false,
        });
    }
    Epoching { epochs, skipped }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PreprocessError {
    #[error("epoch {0} is already filtered")]
    AlreadyFiltered(usize),
    #[error("kernel sample rate {0} Hz differs from the 256 Hz EEG rate")]
    KernelRate(f64),
    #[error("post-denoising epochs are not a subset of the pre-denoising epochs")]
    SubsetViolation,
}

/// High-pass then low-pass, each applied with mirror padding and delay
/// compensation. Convolvers are planned once and reused across epochs.
pub struct EpochFilter {
    high_pass: FirConvolver,
    low_pass: FirConvolver,
}

impl EpochFilter {
    pub fn new(hp: &FilterKernel, lp: &FilterKernel) -> Result<Self, PreprocessError> {
        for k in [hp, lp] {
            if k.sample_rate_hz != EEG_SAMPLE_RATE_HZ {
                return Err(PreprocessError::KernelRate(k.sample_rate_hz));
            }
        }
        Ok(Self {
            high_pass: FirConvolver::new(hp, EPOCH_SAMPLES),
            low_pass: FirConvolver::new(lp, EPOCH_SAMPLES),
        })
    }

    pub fn apply(&self, epoch: &Epoch) -> Result<Epoch, PreprocessError> {
        if epoch.filtered {
            return Err(PreprocessError::AlreadyFiltered(epoch.interval_index));
        }
        Ok(Epoch {
            interval_index: epoch.interval_index,
            state: epoch.state,
            samples: std::array::from_fn(|c| self.apply_channel(&epoch.samples[c])),
            filtered: true,
        })
    }

    pub fn apply_channel(&self, x: &[f64]) -> Vec<f64> {
        self.low_pass.apply(&self.high_pass.apply(x))
    }
}

pub fn filter_epoch(epoch: &Epoch, hp: &FilterKernel, lp: &FilterKernel) -> Result<Epoch, PreprocessError> {
    EpochFilter::new(hp, lp)?.apply(epoch)
}

/// How samples beyond the amplitude threshold are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierPooling {
    /// One fraction over all four channels.
    #[default]
    Pooled,
    /// The largest single-channel fraction decides.
    PerChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRule {
    pub amplitude_threshold_uv: f64,
    pub max_outlier_fraction: f64,
    pub pooling: OutlierPooling,
}

impl Default for OutlierRule {
    fn default() -> Self {
        Self {
            amplitude_threshold_uv: 70.0,
            max_outlier_fraction: 0.30,
            pooling: OutlierPooling::Pooled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Drop,
}

/// Counts samples with `|x| > threshold` and drops the epoch when their
/// fraction is strictly above the allowed maximum.
pub fn artifact_decision(epoch: &Epoch, rule: &OutlierRule) -> (Verdict, f64) {
    let count = |ch: &Vec<f64>| ch.iter().filter(|x| x.abs() > rule.amplitude_threshold_uv).count();
    let fraction = match rule.pooling {
        OutlierPooling::Pooled => {
            let total: usize = epoch.samples.iter().map(Vec::len).sum();
            let outliers: usize = epoch.samples.iter().map(count).sum();
            if total == 0 { 0.0 } else { outliers as f64 / total as f64 }
        }
        OutlierPooling::PerChannel => epoch
            .samples
            .iter()
            .filter(|ch| !ch.is_empty())
            .map(|ch| count(ch) as f64 / ch.len() as f64)
            .fold(0.0, f64::max),
    };
    let verdict = if fraction > rule.max_outlier_fraction {
        Verdict::Drop
    } else {
        Verdict::Keep
    };
    (verdict, fraction)
}

/// Applies [`artifact_decision`] to every epoch.
pub fn reject_artifacts(epochs: Vec<Epoch>, rule: &OutlierRule) -> EpochSet {
    let mut set = EpochSet::default();
    for epoch in epochs {
        match artifact_decision(&epoch, rule) {
            (Verdict::Keep, _) => set.epochs.push(epoch),
            (Verdict::Drop, fraction) => {
                set.dropped.push((epoch.interval_index, fraction));
                set.dropped_states.push(epoch.state);
            }
        }
    }
    set
}

/// Alert/drowsy epoch counts before and after artifact rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSummary {
    pub pre_alert: usize,
    pub pre_drowsy: usize,
    pub post_alert: usize,
    pub post_drowsy: usize,
    pub removal_fraction: f64,
}

impl DenoiseSummary {
    pub fn from_counts(
        pre_alert: usize,
        pre_drowsy: usize,
        post_alert: usize,
        post_drowsy: usize,
    ) -> Result<Self, PreprocessError> {
        if post_alert > pre_alert || post_drowsy > pre_drowsy {
            return Err(PreprocessError::SubsetViolation);
        }
        let pre = pre_alert + pre_drowsy;
        let post = post_alert + post_drowsy;
        let removal_fraction = if pre == 0 { 0.0 } else { 1.0 - post as f64 / pre as f64 };
        Ok(Self {
            pre_alert,
            pre_drowsy,
            post_alert,
            post_drowsy,
            removal_fraction,
        })
    }

    pub fn pre_total(&self) -> usize {
        self.pre_alert + self.pre_drowsy
    }

    pub fn post_total(&self) -> usize {
        self.post_alert + self.post_drowsy
    }

    pub fn removal_percent(&self) -> f64 {
        100.0 * self.removal_fraction
    }

    /// Percentage rounded half-up to two decimals, e.g. `"5.74%"`.
    pub fn removal_percent_text(&self) -> String {
        format!("{:.2}%", round_half_up(self.removal_percent(), 2))
    }

    /// Sums two tallies, e.g. across the sessions of a cohort.
    pub fn combine(&self, other: &Self) -> Self {
        Self::from_counts(
            self.pre_alert + other.pre_alert,
            self.pre_drowsy + other.pre_drowsy,
            self.post_alert + other.post_alert,
            self.post_drowsy + other.post_drowsy,
        )
        .expect("sums of valid tallies are valid")
    }

    pub fn empty() -> Self {
        Self::from_counts(0, 0, 0, 0).unwrap()
    }
}

pub fn round_half_up(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    // nudge by a relative epsilon so binary representation error cannot round a true .5 down
    ((value * scale) * (1.0 + 1e-12) + 0.5).floor() / scale
}

/// Tallies `pre` against the epochs that survived rejection.
pub fn denoise_summary(pre: &[Epoch], post: &EpochSet) -> Result<DenoiseSummary, PreprocessError> {
    let pre_ids: HashSet<usize> = pre.iter().map(|e| e.interval_index).collect();
    if post.epochs.iter().any(|e| !pre_ids.contains(&e.interval_index)) {
        return Err(PreprocessError::SubsetViolation);
    }
    let tally = |it: &mut dyn Iterator<Item = BinaryState>| {
        it.fold((0, 0), |(a, d), s| match s {
            BinaryState::Alert => (a + 1, d),
            BinaryState::Drowsy => (a, d + 1),
        })
    };
    let (pre_alert, pre_drowsy) = tally(&mut pre.iter().map(|e| e.state));
    let (post_alert, post_drowsy) = tally(&mut post.epochs.iter().map(|e| e.state));
    DenoiseSummary::from_counts(pre_alert, pre_drowsy, post_alert, post_drowsy)
}
