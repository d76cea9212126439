//! Nonparametric tests and the per-feature alert-vs-drowsy separation report.

mod ks;
mod rank_sum;

pub use ks::{ks_normal_test, lilliefors_p_value, lilliefors_statistic, MIN_KS_SAMPLES};
pub use rank_sum::{
    exact_rank_sum_p, exact_u_counts, midranks, rank_sum_test, rank_sum_test_with, PValuePath,
    EXACT_MAX_MIN_N, ORACLE_MAX_N,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::session::BinaryState;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Fewest epochs per state a separation report accepts.
pub const MIN_GROUP_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    ExactEnumeration,
    NormalApprox,
    KsLilliefors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("both samples must be non-empty")]
    EmptySample,
    #[error("samples contain non-finite values")]
    NonFinite,
    #[error("exact path needs tie-free samples")]
    ExactUnavailable,
    #[error("pooled size {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("both alert and drowsy epochs are required (alert {alert}, drowsy {drowsy})")]
    NeedTwoGroups { alert: usize, drowsy: usize },
    #[error("alpha {0} must lie in (0, 1)")]
    InvalidAlpha(f64),
}

/// One feature's alert-vs-drowsy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub feature: String,
    pub n_alert: usize,
    pub n_drowsy: usize,
    /// Lilliefors p of each group; `None` when the group is constant.
    pub ks_p_alert: Option<f64>,
    pub ks_p_drowsy: Option<f64>,
    /// U statistic of the alert group.
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub cohort: String,
    pub config_digest: String,
    pub alpha: f64,
    pub rows: Vec<SeparationRow>,
}

impl SeparationReport {
    pub fn row(&self, feature: &str) -> Option<&SeparationRow> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn significant_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.significant).count() as f64 / self.rows.len() as f64
    }

    pub fn min_p(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.p_value).reduce(f64::min)
    }

    /// Rows whose feature name satisfies `keep`, order preserved.
    pub fn filtered(&self, keep: impl Fn(&str) -> bool) -> SeparationReport {
        SeparationReport {
            cohort: self.cohort.clone(),
            config_digest: self.config_digest.clone(),
            alpha: self.alpha,
            rows: self.rows.iter().filter(|r| keep(&r.feature)).cloned().collect(),
        }
    }
}

fn ks_p(sample: &[f64]) -> Option<f64> {
    ks_normal_test(sample).ok().map(|r| r.p_value)
}

/// Tests every column of `features` for alert-vs-drowsy separation, pooling
/// all rows regardless of session. The normality gate is recorded per group
/// but the p-value always comes from the rank-sum test.
pub fn separation_report(features: &FeatureMatrix, alpha: f64) -> Result<SeparationReport, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    let alert = features.count(BinaryState::Alert);
    let drowsy = features.count(BinaryState::Drowsy);
    if alert == 0 || drowsy == 0 {
        return Err(StatsError::NeedTwoGroups { alert, drowsy });
    }
    let smaller = alert.min(drowsy);
    if smaller < MIN_GROUP_SIZE {
        return Err(StatsError::TooFewSamples { needed: MIN_GROUP_SIZE, got: smaller });
    }
    let test_column = |j: usize| -> Result<SeparationRow, StatsError> {
        let (a, d) = features.split_column(j);
        let rs = rank_sum_test(&a, &d)?;
        Ok(SeparationRow {
            feature: features.names[j].clone(),
            n_alert: a.len(),
            n_drowsy: d.len(),
            ks_p_alert: ks_p(&a),
            ks_p_drowsy: ks_p(&d),
            statistic: rs.statistic,
            p_value: rs.p_value,
            method: rs.method,
            significant: rs.p_value < alpha,
        })
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        (0..features.names.len()).into_par_iter().map(test_column).collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = (0..features.names.len()).map(test_column).collect::<Result<Vec<_>, _>>()?;
    Ok(SeparationReport {
        cohort: String::new(),
        config_digest: String::new(),
        alpha,
        rows,
    })
}
