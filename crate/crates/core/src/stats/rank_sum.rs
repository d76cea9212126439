//! Wilcoxon rank-sum / Mann-Whitney U test.
//!
//! Small tie-free samples (smaller group of at most 8) use the exact null
//! distribution of U, built from the Gaussian-binomial generating function.
//! Everything else uses the normal approximation with tie-corrected variance
//! and a 0.5 continuity correction. Both report a two-sided p-value
//! `2 * min(tail, 0.5)`.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{StatsError, TestMethod, TestResult};

/// Largest smaller-group size that takes the exact path.
pub const EXACT_MAX_MIN_N: usize = 8;

/// Cap on the larger group for the exact path; keeps the U-count table small and inside `i128`.
const EXACT_MAX_OTHER_N: usize = 50_000;

/// Largest pooled size the brute-force oracle accepts.
pub const ORACLE_MAX_N: usize = 16;

/// Which p-value path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValuePath {
    /// Exact for small tie-free samples, normal approximation otherwise.
    Auto,
    Exact,
    NormalApprox,
}

/// Midranks of the pooled sample (ties share the average rank), and the tie
/// group sizes.
pub fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn check(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// U statistic of `a` and the tie groups of the pooled sample.
fn u_statistic(a: &[f64], b: &[f64]) -> (f64, Vec<usize>) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let na = a.len() as f64;
    (rank_sum_a - na * (na + 1.0) / 2.0, ties)
}

fn two_sided(lower: f64, upper: f64) -> f64 {
    (2.0 * lower.min(upper).min(0.5)).clamp(0.0, 1.0)
}

/// Counts of each U value (0..=m*n) under the null, i.e. the coefficients of
/// the Gaussian binomial `[m+n choose m]_q`.
pub fn exact_u_counts(m: usize, n: usize) -> Vec<i128> {
    let (m, n) = (m.min(n), m.max(n));
    let max_u = m * n;
    let mut poly = vec![0i128; max_u + 1];
    poly[0] = 1;
    // prod_{i=1..m} (1 - q^{n+i}) / (1 - q^i)
    for i in 1..=m {
        let shift = n + i;
        for k in (shift..=max_u).rev() {
            poly[k] -= poly[k - shift];
        }
        for k in i..=max_u {
            poly[k] += poly[k - i];
        }
    }
    poly
}

fn exact_p(u: f64, m: usize, n: usize) -> f64 {
    let counts = exact_u_counts(m, n);
    let total: i128 = counts.iter().sum();
    let u = u.round() as usize;
    let lower: i128 = counts[..=u].iter().sum();
    let upper: i128 = counts[u..].iter().sum();
    two_sided(lower as f64 / total as f64, upper as f64 / total as f64)
}

fn normal_p(u: f64, m: usize, n: usize, ties: &[usize]) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let big_n = mf + nf;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let correction = if big_n > 1.0 { tie_term / (big_n * (big_n - 1.0)) } else { 0.0 };
    let var = mf * nf / 12.0 * ((big_n + 1.0) - correction);
    if var <= 0.0 {
        return 1.0;
    }
    let mu = mf * nf / 2.0;
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    two_sided(Normal::standard().cdf(-z), 1.0)
}

/// Two-sided rank-sum test of `a` against `b`, choosing the path automatically.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    rank_sum_test_with(a, b, PValuePath::Auto)
}

pub fn rank_sum_test_with(a: &[f64], b: &[f64], path: PValuePath) -> Result<TestResult, StatsError> {
    check(a, b)?;
    let (u, ties) = u_statistic(a, b);
    let (m, n) = (a.len(), b.len());
    let exact_ok = ties.is_empty() && m.max(n) <= EXACT_MAX_OTHER_N;
    let use_exact = match path {
        PValuePath::Auto => exact_ok && m.min(n) <= EXACT_MAX_MIN_N,
        PValuePath::Exact if exact_ok => true,
        PValuePath::Exact => return Err(StatsError::ExactUnavailable),
        PValuePath::NormalApprox => false,
    };
    let (p_value, method) = if use_exact {
        (exact_p(u, m, n), TestMethod::ExactEnumeration)
    } else {
        (normal_p(u, m, n, &ties), TestMethod::NormalApprox)
    };
    Ok(TestResult {
        statistic: u,
        p_value,
        method,
        n_a: m,
        n_b: n,
    })
}

/// Brute-force exact two-sided p-value: enumerates every way to assign the
/// pooled midranks to a group of size `a.len()`.
pub fn exact_rank_sum_p(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check(a, b)?;
    let total_n = a.len() + b.len();
    if total_n > ORACLE_MAX_N {
        return Err(StatsError::TooLarge { n: total_n, max: ORACLE_MAX_N });
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = midranks(&pooled);
    let observed: f64 = ranks[..a.len()].iter().sum();
    let (mut le, mut ge, mut all) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1u32 << total_n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let s: f64 = (0..total_n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        all += 1;
        // midranks are multiples of 1/2, so these sums are exact
        if s <= observed {
            le += 1;
        }
        if s >= observed {
            ge += 1;
        }
    }
    Ok(two_sided(le as f64 / all as f64, ge as f64 / all as f64))
}
