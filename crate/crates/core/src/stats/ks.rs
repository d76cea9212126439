//! Kolmogorov-Smirnov normality test with estimated parameters (Lilliefors).

use statrs::distribution::{ContinuousCDF, Normal};

use super::{StatsError, TestMethod, TestResult};

pub const MIN_KS_SAMPLES: usize = 4;

/// Largest gap between the empirical CDF and the normal CDF fitted with the
/// sample mean and (n-1) standard deviation.
pub fn lilliefors_statistic(sample: &[f64]) -> Result<f64, StatsError> {
    let n = sample.len();
    if n < MIN_KS_SAMPLES {
        return Err(StatsError::TooFewSamples { needed: MIN_KS_SAMPLES, got: n });
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > mean.abs() * 1e-12) || sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let std = Normal::standard();
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = std.cdf((x - mean) / sd);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Asymptotic Lilliefors p-value for statistic `d` at sample size `n`.
///
/// Dallal-Wilkinson approximation, switching to Stephens' modified
/// polynomial when the first estimate exceeds 0.1 (the same scheme as R's
/// `nortest::lillie.test`).
pub fn lilliefors_p_value(d: f64, n: usize) -> f64 {
    let nf = n as f64;
    let (kd, nd) = if n <= 100 {
        (d, nf)
    } else {
        (d * (nf / 100.0).powf(0.49), 100.0)
    };
    let mut p = (-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * (nd + 2.78019).sqrt()
        - 0.122119
        + 0.974598 / nd.sqrt()
        + 1.67997 / nd)
        .exp();
    if p > 0.1 {
        let kk = (nf.sqrt() - 0.01 + 0.85 / nf.sqrt()) * d;
        p = if kk <= 0.302 {
            1.0
        } else if kk <= 0.5 {
            2.76773 - 19.828315 * kk + 80.709644 * kk.powi(2) - 138.55152 * kk.powi(3)
                + 81.218052 * kk.powi(4)
        } else if kk <= 0.9 {
            -4.901232 + 40.662806 * kk - 97.490286 * kk.powi(2) + 94.029866 * kk.powi(3)
                - 32.355711 * kk.powi(4)
        } else if kk <= 1.31 {
            6.198765 - 19.558097 * kk + 23.186922 * kk.powi(2) - 12.234627 * kk.powi(3)
                + 2.423045 * kk.powi(4)
        } else {
            0.0
        };
    }
    p.clamp(0.0, 1.0)
}

/// Two-sided KS test of normality with mean and deviation estimated from the sample.
pub fn ks_normal_test(sample: &[f64]) -> Result<TestResult, StatsError> {
    let d = lilliefors_statistic(sample)?;
    Ok(TestResult {
        statistic: d,
        p_value: lilliefors_p_value(d, sample.len()),
        method: TestMethod::KsLilliefors,
        n_a: sample.len(),
        n_b: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quantile_sample(n: usize) -> Vec<f64> {
        let std = Normal::standard();
        (1..=n).map(|i| std.inverse_cdf(i as f64 / (n + 1) as f64)).collect()
    }

    #[test]
    fn normal_quantiles_pass() {
        let r = ks_normal_test(&quantile_sample(100)).unwrap();
        assert!(r.p_value > 0.5, "p = {}", r.p_value);
        assert_eq!(r.method, TestMethod::KsLilliefors);
    }

    #[test]
    fn two_point_sample_fails() {
        let sample: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let r = ks_normal_test(&sample).unwrap();
        // ECDF jumps to 1/2 at 0 while the fitted normal sits at Φ(-0.5 / s)
        let s = (100.0 * 0.25 / 99.0f64).sqrt();
        let expected = 0.5 - Normal::standard().cdf(-0.5 / s);
        assert!((r.statistic - expected).abs() < 1e-12);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(ks_normal_test(&[3.0; 10]).unwrap_err(), StatsError::ZeroVariance);
        assert!(matches!(
            ks_normal_test(&[1.0, 2.0, 3.0]),
            Err(StatsError::TooFewSamples { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn p_value_is_monotone_in_d() {
        for n in [10, 50, 100, 500] {
            let mut last = 1.0;
            for i in 0..200 {
                let p = lilliefors_p_value(i as f64 * 0.002, n);
                assert!(p <= last + 1e-9, "n={n}, d={}", i as f64 * 0.002);
                last = p;
            }
        }
    }

    proptest! {
        #[test]
        fn statistic_is_affine_invariant(
            xs in prop::collection::vec(-100.0f64..100.0, 5..80),
            shift in -1e3f64..1e3,
            scale in 0.01f64..100.0,
        ) {
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let d0 = lilliefors_statistic(&xs).unwrap();
            let ys: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
            let d1 = lilliefors_statistic(&ys).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
    }
}
