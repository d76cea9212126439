//! End-to-end cohort analysis: epoch, filter, reject, extract, test.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::preprocess::{
    design_fir, epoch_signal, reject_artifacts, DenoiseSummary, DesignError, EpochFilter,
    FilterKind, OutlierPooling, OutlierRule, PreprocessError,
};
use crate::session::{validate_session, Channel, Session, Violation, EEG_SAMPLE_RATE_HZ};
use crate::spectral::{feature_name, Band, FeatureExtractor, PowerKind, SpectralError};
use crate::stats::{separation_report, SeparationReport, SeparationRow, StatsError};
use crate::vehicle::{interval_aggregate, AggregateMode};

/// Every tunable of the analysis. Defaults reproduce the published procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub highpass_cutoff_hz: f64,
    pub highpass_transition_hz: f64,
    pub lowpass_cutoff_hz: f64,
    pub lowpass_transition_hz: f64,
    pub amplitude_threshold_uv: f64,
    pub max_outlier_fraction: f64,
    pub outlier_pooling: OutlierPooling,
    pub nfft: usize,
    pub alpha: f64,
    pub vehicle_mode: AggregateMode,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            highpass_cutoff_hz: 0.1,
            highpass_transition_hz: 0.2,
            lowpass_cutoff_hz: 40.0,
            lowpass_transition_hz: 4.0,
            amplitude_threshold_uv: 70.0,
            max_outlier_fraction: 0.30,
            outlier_pooling: OutlierPooling::Pooled,
            nfft: 1024,
            alpha: 0.05,
            vehicle_mode: AggregateMode::Mean,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = [
            ("highpass_cutoff_hz", self.highpass_cutoff_hz),
            ("highpass_transition_hz", self.highpass_transition_hz),
            ("lowpass_cutoff_hz", self.lowpass_cutoff_hz),
            ("lowpass_transition_hz", self.lowpass_transition_hz),
            ("amplitude_threshold_uv", self.amplitude_threshold_uv),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PipelineError::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.max_outlier_fraction) {
            return Err(PipelineError::InvalidParam(format!(
                "max_outlier_fraction {} outside [0, 1]",
                self.max_outlier_fraction
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::InvalidParam(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.highpass_cutoff_hz >= self.lowpass_cutoff_hz {
            return Err(PipelineError::InvalidParam("high-pass cutoff must lie below the low-pass cutoff".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, as lowercase hex.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        Sha256::digest(json.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn outlier_rule(&self) -> OutlierRule {
        OutlierRule {
            amplitude_threshold_uv: self.amplitude_threshold_uv,
            max_outlier_fraction: self.max_outlier_fraction,
            pooling: self.outlier_pooling,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("filter design failed: {0}")]
    Design(#[from] DesignError),
    #[error("spectral setup failed: {0}")]
    Spectral(#[from] SpectralError),
    #[error("preprocessing failed: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("session {id} is invalid: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSession { id: String, violations: Vec<Violation> },
    #[error("no sessions to analyze")]
    NoSessions,
    #[error("{table} table: {source}")]
    Stats {
        table: &'static str,
        #[source]
        source: StatsError,
    },
}

/// Features and tallies of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionFeatures {
    pub session_id: String,
    pub eeg: FeatureMatrix,
    /// `None` when the session has no telemetry.
    pub vehicle: Option<FeatureMatrix>,
    pub denoise: DenoiseSummary,
    pub warnings: Vec<String>,
}

/// A configured pipeline; kernels and FFT plans are built once.
pub struct Pipeline {
    params: PipelineParams,
    filter: EpochFilter,
    extractor: FeatureExtractor,
}

impl Pipeline {
    pub fn new(params: PipelineParams) -> Result<Self, PipelineError> {
        params.validate()?;
        let hp = design_fir(
            FilterKind::HighPass,
            params.highpass_cutoff_hz,
            EEG_SAMPLE_RATE_HZ,
            params.highpass_transition_hz,
        )?;
        let lp = design_fir(
            FilterKind::LowPass,
            params.lowpass_cutoff_hz,
            EEG_SAMPLE_RATE_HZ,
            params.lowpass_transition_hz,
        )?;
        Ok(Self {
            params,
            filter: EpochFilter::new(&hp, &lp)?,
            extractor: FeatureExtractor::new(params.nfft)?,
        })
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn session_features(&self, session: &Session) -> Result<SessionFeatures, PipelineError> {
        let report = validate_session(session);
        if !report.is_valid() {
            return Err(PipelineError::InvalidSession {
                id: session.id.clone(),
                violations: report.violations,
            });
        }
        let mut warnings = Vec::new();
        let epoching = epoch_signal(&session.eeg, &session.labels);
        if epoching.skipped > 0 {
            warnings.push(format!("{}: {} intervals not covered by EEG", session.id, epoching.skipped));
        }
        let filtered = epoching
            .epochs
            .iter()
            .map(|e| self.filter.apply(e))
            .collect::<Result<Vec<_>, _>>()?;
        let kept = reject_artifacts(filtered, &self.params.outlier_rule());
        let denoise = crate::preprocess::denoise_summary(&epoching.epochs, &kept)?;

        let mut eeg = FeatureMatrix::eeg();
        for epoch in &kept.epochs {
            match self.extractor.extract(epoch) {
                Ok(fv) => eeg.push_eeg(&session.id, &fv),
                Err(e) => warnings.push(format!("{}: interval {} skipped: {e}", session.id, epoch.interval_index)),
            }
        }

        let vehicle = session.telemetry.as_ref().map(|tel| {
            let agg = interval_aggregate(tel, &session.labels, self.params.vehicle_mode);
            if !agg.skipped.is_empty() {
                warnings.push(format!("{}: {} intervals lack telemetry", session.id, agg.skipped.len()));
            }
            let mut m = FeatureMatrix::vehicle();
            for fv in &agg.features {
                m.push_vehicle(&session.id, fv);
            }
            m
        });

        Ok(SessionFeatures {
            session_id: session.id.clone(),
            eeg,
            vehicle,
            denoise,
            warnings,
        })
    }

    /// Features of every session, in input order.
    pub fn cohort_features(&self, sessions: &[Session]) -> Result<Vec<SessionFeatures>, PipelineError> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            sessions.par_iter().map(|s| self.session_features(s)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            sessions.iter().map(|s| self.session_features(s)).collect()
        }
    }

    pub fn analyze(&self, sessions: &[Session], cohort: &str) -> Result<CohortAnalysis, PipelineError> {
        if sessions.is_empty() {
            return Err(PipelineError::NoSessions);
        }
        let per_session = self.cohort_features(sessions)?;
        let mut eeg = FeatureMatrix::eeg();
        let mut vehicle = FeatureMatrix::vehicle();
        let mut denoise = DenoiseSummary::empty();
        let mut warnings = Vec::new();
        let mut any_telemetry = false;
        for s in per_session {
            eeg.extend(s.eeg);
            if let Some(v) = s.vehicle {
                any_telemetry = true;
                vehicle.extend(v);
            }
            denoise = denoise.combine(&s.denoise);
            warnings.extend(s.warnings);
        }
        let eeg_report = separation_report(&eeg, self.params.alpha)
            .map_err(|source| PipelineError::Stats { table: "EEG", source })?;
        let vehicle_rows = if any_telemetry {
            separation_report(&vehicle, self.params.alpha)
                .map_err(|source| PipelineError::Stats { table: "vehicle", source })?
                .rows
        } else {
            warnings.push("no session carries telemetry; vehicle table is empty".into());
            Vec::new()
        };
        let kind_rows = |kind: PowerKind| {
            eeg_report
                .filtered(|name| name.ends_with(kind.suffix()))
                .rows
        };
        let report = CohortReport {
            cohort: cohort.to_string(),
            config_digest: self.params.digest(),
            config: self.params,
            alpha: self.params.alpha,
            sessions: sessions.len(),
            eeg_absolute: kind_rows(PowerKind::Absolute),
            eeg_relative: kind_rows(PowerKind::Relative),
            vehicle: vehicle_rows,
            denoise_table: DenoiseTable::from(&denoise),
            warnings,
        };
        Ok(CohortAnalysis { eeg, vehicle, denoise, report })
    }
}

/// Convenience wrapper around [`Pipeline::analyze`].
pub fn analyze_cohort(
    sessions: &[Session],
    params: &PipelineParams,
    cohort: &str,
) -> Result<CohortAnalysis, PipelineError> {
    Pipeline::new(*params)?.analyze(sessions, cohort)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortAnalysis {
    pub eeg: FeatureMatrix,
    pub vehicle: FeatureMatrix,
    pub denoise: DenoiseSummary,
    pub report: CohortReport,
}

/// Epoch counts before and after artifact rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseTable {
    pub pre_alert: usize,
    pub pre_drowsy: usize,
    pub pre_total: usize,
    pub post_alert: usize,
    pub post_drowsy: usize,
    pub post_total: usize,
    /// Rounded half-up to two decimals.
    pub removal_percent: f64,
}

impl From<&DenoiseSummary> for DenoiseTable {
    fn from(d: &DenoiseSummary) -> Self {
        Self {
            pre_alert: d.pre_alert,
            pre_drowsy: d.pre_drowsy,
            pre_total: d.pre_total(),
            post_alert: d.post_alert,
            post_drowsy: d.post_drowsy,
            post_total: d.post_total(),
            removal_percent: crate::preprocess::round_half_up(d.removal_percent(), 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort: String,
    pub config_digest: String,
    pub config: PipelineParams,
    pub alpha: f64,
    pub sessions: usize,
    pub eeg_absolute: Vec<SeparationRow>,
    pub eeg_relative: Vec<SeparationRow>,
    pub vehicle: Vec<SeparationRow>,
    pub denoise_table: DenoiseTable,
    pub warnings: Vec<String>,
}

impl CohortReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn all_rows(&self) -> impl Iterator<Item = &SeparationRow> {
        self.eeg_absolute.iter().chain(&self.eeg_relative).chain(&self.vehicle)
    }

    pub fn row(&self, feature: &str) -> Option<&SeparationRow> {
        self.all_rows().find(|r| r.feature == feature)
    }

    /// Share of rows flagged significant over every table.
    pub fn significant_fraction(&self) -> f64 {
        let (sig, n) = self
            .all_rows()
            .fold((0usize, 0usize), |(s, n), r| (s + r.significant as usize, n + 1));
        if n == 0 { 0.0 } else { sig as f64 / n as f64 }
    }

    /// The EEG rows as a [`SeparationReport`] carrying this report's metadata.
    pub fn eeg_report(&self) -> SeparationReport {
        SeparationReport {
            cohort: self.cohort.clone(),
            config_digest: self.config_digest.clone(),
            alpha: self.alpha,
            rows: self.eeg_absolute.iter().chain(&self.eeg_relative).cloned().collect(),
        }
    }

    /// Table-shaped CSV files as `(file name, contents)`, in a fixed order.
    pub fn table_csvs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (stem, rows, kind) in [
            ("eeg_absolute", &self.eeg_absolute, PowerKind::Absolute),
            ("eeg_relative", &self.eeg_relative, PowerKind::Relative),
        ] {
            out.push((format!("{stem}.csv"), band_table(rows, kind, |r| format!("{:.4e}", r.p_value))));
            out.push((
                format!("{stem}_significant.csv"),
                band_table(rows, kind, |r| r.significant.to_string()),
            ));
        }
        out.push(("vehicle.csv".into(), vehicle_table(&self.vehicle)));
        out.push(("denoise.csv".into(), denoise_csv(&self.denoise_table)));
        out
    }
}

/// Bands as rows and channels as columns.
fn band_table(rows: &[SeparationRow], kind: PowerKind, cell: impl Fn(&SeparationRow) -> String) -> String {
    let mut s = String::from("band");
    for ch in Channel::ALL {
        s.push(',');
        s.push_str(ch.name());
    }
    s.push('\n');
    for band in Band::ALL {
        s.push_str(band.name());
        for ch in Channel::ALL {
            let name = feature_name(ch, band, kind);
            s.push(',');
            if let Some(r) = rows.iter().find(|r| r.feature == name) {
                s.push_str(&cell(r));
            }
        }
        s.push('\n');
    }
    s
}

fn vehicle_table(rows: &[SeparationRow]) -> String {
    let mut s = String::from("feature,n_alert,n_drowsy,statistic,p_value,significant\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.4e},{}",
            r.feature, r.n_alert, r.n_drowsy, r.statistic, r.p_value, r.significant
        );
    }
    s
}

fn denoise_csv(t: &DenoiseTable) -> String {
    format!(
        "stage,alert,drowsy,total\nbefore,{},{},{}\nafter,{},{},{}\nremoved_percent,,,{:.2}\n",
        t.pre_alert, t.pre_drowsy, t.pre_total, t.post_alert, t.post_drowsy, t.post_total, t.removal_percent
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_session, SynthSpec};

    fn cohort(spec: &SynthSpec, seeds: std::ops::Range<u64>) -> Vec<Session> {
        seeds.map(|s| generate_session(spec, s).unwrap()).collect()
    }

    #[test]
    fn digest_tracks_every_parameter() {
        let base = PipelineParams::default();
        assert_eq!(base.digest(), PipelineParams::default().digest());
        assert_eq!(base.digest().len(), 64);
        let variants = [
            PipelineParams { alpha: 0.01, ..base },
            PipelineParams { nfft: 512, ..base },
            PipelineParams { max_outlier_fraction: 0.31, ..base },
            PipelineParams { outlier_pooling: OutlierPooling::PerChannel, ..base },
            PipelineParams { vehicle_mode: AggregateMode::AbsMean, ..base },
            PipelineParams { lowpass_cutoff_hz: 39.0, ..base },
        ];
        for v in variants {
            assert_ne!(v.digest(), base.digest(), "{v:?}");
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = PipelineParams { alpha: 0.0, ..Default::default() };
        assert!(matches!(Pipeline::new(p), Err(PipelineError::InvalidParam(_))));
        let p = PipelineParams { highpass_cutoff_hz: 50.0, ..Default::default() };
        assert!(Pipeline::new(p).is_err());
    }

    #[test]
    fn theta_effect_is_detected() {
        let mut spec = SynthSpec { n_intervals: 50, ..Default::default() };
        spec.drowsy_multipliers.theta = 2.0;
        let sessions = cohort(&spec, 0..4);
        let a = analyze_cohort(&sessions, &PipelineParams::default(), "theta").unwrap();
        let r = &a.report;
        assert_eq!(r.eeg_absolute.len(), 20);
        assert_eq!(r.eeg_relative.len(), 20);
        assert_eq!(r.vehicle.len(), 4);
        assert_eq!(r.eeg_absolute[0].feature, "TP9_delta_abs");
        assert_eq!(r.eeg_absolute[5].feature, "AF7_delta_abs");
        for ch in Channel::ALL {
            let row = r.row(&feature_name(ch, Band::Theta, PowerKind::Absolute)).unwrap();
            assert!(row.p_value < 1e-6 && row.significant, "{row:?}");
            assert_eq!(row.n_alert, 100);
        }
        assert_eq!(r.denoise_table.pre_total, 200);
        assert_eq!(r.denoise_table.post_total, 200);
    }

    #[test]
    fn single_state_cohort_fails() {
        let spec = SynthSpec { n_intervals: 6, drowsy_fraction: 0.0, ..Default::default() };
        let err = analyze_cohort(&cohort(&spec, 0..1), &PipelineParams::default(), "x").unwrap_err();
        assert!(matches!(err, PipelineError::Stats { source: StatsError::NeedTwoGroups { .. }, .. }));
    }

    #[test]
    fn report_is_deterministic_and_tables_are_shaped() {
        let spec = SynthSpec { n_intervals: 10, ..Default::default() };
        let sessions = cohort(&spec, 3..5);
        let p = PipelineParams::default();
        let a = analyze_cohort(&sessions, &p, "det").unwrap().report;
        let b = analyze_cohort(&sessions, &p, "det").unwrap().report;
        assert_eq!(a.to_json(), b.to_json());
        let back: CohortReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);

        let tables = a.table_csvs();
        let names: Vec<_> = tables.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            [
                "eeg_absolute.csv",
                "eeg_absolute_significant.csv",
                "eeg_relative.csv",
                "eeg_relative_significant.csv",
                "vehicle.csv",
                "denoise.csv"
            ]
        );
        let abs = &tables[0].1;
        let lines: Vec<_> = abs.lines().collect();
        assert_eq!(lines[0], "band,TP9,AF7,AF8,TP10");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("theta,"));
        assert_eq!(lines[2].split(',').count(), 5);
        assert!(tables[1].1.lines().nth(1).unwrap().split(',').skip(1).all(|c| c == "true" || c == "false"));
    }

    #[test]
    fn sessions_without_telemetry_leave_vehicle_empty() {
        let spec = SynthSpec { n_intervals: 10, vehicle: None, ..Default::default() };
        let a = analyze_cohort(&cohort(&spec, 0..1), &PipelineParams::default(), "v").unwrap();
        assert!(a.report.vehicle.is_empty());
        assert!(a.report.warnings.iter().any(|w| w.contains("telemetry")));
    }

    #[test]
    fn denoise_csv_layout() {
        let d = DenoiseSummary::from_counts(1058, 2986, 998, 2814).unwrap();
        assert_eq!(
            denoise_csv(&DenoiseTable::from(&d)),
            "stage,alert,drowsy,total\nbefore,1058,2986,4044\nafter,998,2814,3812\nremoved_percent,,,5.74\n"
        );
    }
}
