//! Per-interval means of the simulator telemetry.

use serde::{Deserialize, Serialize};

use crate::session::{BinaryState, OrdLabelTrack, VehicleSignal, VehicleTelemetry};

/// Minimum fraction of an interval's expected samples needed to emit a mean.
pub const MIN_COVERAGE: f64 = 0.5;

/// How each interval is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Plain arithmetic mean of the signed signal.
    #[default]
    Mean,
    /// Mean of the absolute value.
    AbsMean,
}

/// Interval means in [`VehicleSignal::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleFeatureVector {
    pub values: [f64; 4],
    pub interval_index: usize,
    pub state: BinaryState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub features: Vec<VehicleFeatureVector>,
    /// Intervals skipped for low coverage or invalid ratings.
    pub skipped: Vec<usize>,
}

/// Averages every telemetry series over each 30 s rating interval.
///
/// Samples count toward interval k when their session-clock time lies in
/// `[30k, 30(k+1))`. Intervals with less than half the expected sample count
/// are skipped.
pub fn interval_aggregate(
    telemetry: &VehicleTelemetry,
    labels: &OrdLabelTrack,
    mode: AggregateMode,
) -> Aggregation {
    let n_int = labels.intervals.len();
    let width = labels.interval_seconds;
    let mut sums = vec![[0.0f64; 4]; n_int];
    let mut counts = vec![0usize; n_int];
    for i in 0..telemetry.len() {
        let t = telemetry.time_of(i);
        // tolerance keeps samples computed as exactly 30k from falling into k-1
        let k = (t / width + 1e-9).floor();
        if k < 0.0 || k >= n_int as f64 {
            continue;
        }
        let k = k as usize;
        counts[k] += 1;
        for (s, signal) in VehicleSignal::ALL.iter().enumerate() {
            let v = telemetry.series(*signal)[i];
            sums[k][s] += match mode {
                AggregateMode::Mean => v,
                AggregateMode::AbsMean => v.abs(),
            };
        }
    }

    let expected = width * telemetry.sample_rate_hz;
    let mut features = Vec::new();
    let mut skipped = Vec::new();
    for (interval, (sum, &count)) in labels.intervals.iter().zip(sums.iter().zip(&counts)) {
        let state = match interval.state() {
            Ok(s) if count > 0 && count as f64 >= MIN_COVERAGE * expected => s,
            _ => {
                skipped.push(interval.index);
                continue;
            }
        };
        features.push(VehicleFeatureVector {
            values: sum.map(|s| s / count as f64),
            interval_index: interval.index,
            state,
        });
    }
    Aggregation { features, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::OrdInterval;
    use proptest::prelude::*;

    fn labels(n: usize) -> OrdLabelTrack {
        OrdLabelTrack::new(
            (0..n)
                .map(|index| OrdInterval {
                    index,
                    ratings: [1, 1, 1],
                })
                .collect(),
        )
    }

    fn telemetry(rate: f64, n: usize, f: impl Fn(usize) -> f64) -> VehicleTelemetry {
        VehicleTelemetry {
            sample_rate_hz: rate,
            steer_angle: (0..n).map(&f).collect(),
            steer_speed: vec![3.0; n],
            lane_deviation: vec![0.4; n],
            torque: (0..n).map(|i| i as f64).collect(),
            start_time_s: 0.0,
        }
    }

    #[test]
    fn constant_and_alternating_means() {
        let tel = telemetry(50.0, 3000, |i| if i % 2 == 0 { 5.0 } else { -5.0 });
        let agg = interval_aggregate(&tel, &labels(2), AggregateMode::Mean);
        assert_eq!(agg.features.len(), 2);
        assert!(agg.skipped.is_empty());
        let first = &agg.features[0];
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9 * b.abs().max(1.0);
        assert!(close(first.values[2], 0.4));
        assert_eq!(first.values[0], 0.0);
        assert!(close(first.values[3], 1499.0 / 2.0));
        assert!(close(agg.features[1].values[3], (1500.0 + 2999.0) / 2.0));

        let abs = interval_aggregate(&tel, &labels(2), AggregateMode::AbsMean);
        assert_eq!(abs.features[0].values[0], 5.0);
    }

    #[test]
    fn low_coverage_interval_is_skipped() {
        // 30 s fully covered, then 3 s (10%) of the second interval
        let tel = telemetry(50.0, 1500 + 150, |_| 1.0);
        let agg = interval_aggregate(&tel, &labels(2), AggregateMode::Mean);
        assert_eq!(agg.features.len(), 1);
        assert_eq!(agg.skipped, vec![1]);
    }

    #[test]
    fn start_offset_shifts_interval_membership() {
        let mut tel = telemetry(10.0, 600, |i| if i < 300 { 1.0 } else { 2.0 });
        tel.start_time_s = 15.0;
        let agg = interval_aggregate(&tel, &labels(3), AggregateMode::Mean);
        // interval 0 gets 15 s of samples (50%), interval 1 a mix, interval 2 the rest
        assert_eq!(agg.features.len(), 3);
        assert_eq!(agg.features[0].values[0], 1.0);
        assert_eq!(agg.features[1].values[0], 1.5);
        assert_eq!(agg.features[2].values[0], 2.0);
    }

    proptest! {
        #[test]
        fn mean_is_rate_invariant(rate in prop::sample::select(vec![10.0, 25.0, 50.0, 60.0, 100.0]), level in -50.0f64..50.0, n_int in 1usize..5) {
            let n = (rate * 30.0) as usize * n_int;
            let tel = telemetry(rate, n, |_| level);
            let agg = interval_aggregate(&tel, &labels(n_int + 2), AggregateMode::Mean);
            prop_assert_eq!(agg.features.len(), n_int);
            for f in &agg.features {
                prop_assert!((f.values[0] - level).abs() <= 1e-12 * level.abs().max(1.0));
            }
            let mut seen = std::collections::HashSet::new();
            for f in &agg.features {
                prop_assert!(f.interval_index < n_int + 2);
                prop_assert!(seen.insert(f.interval_index));
            }
        }
    }
}
