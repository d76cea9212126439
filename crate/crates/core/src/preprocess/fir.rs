//! Windowed-sinc FIR design and per-epoch zero-delay filtering.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Transition-width factor of the Hamming window: N ≈ 3.3 / (Δf / fs).
pub const HAMMING_TRANSITION_FACTOR: f64 = 3.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    LowPass,
    HighPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DesignError {
    #[error("cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({nyquist_hz} Hz)")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("transition width {0} Hz must be positive")]
    InvalidTransition(f64),
}

/// Symmetric, odd-length FIR kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    pub taps: Vec<f64>,
    pub kind: FilterKind,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
}

impl FilterKernel {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples.
    pub fn delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex<f64> {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| Complex::from_polar(h, -w * n as f64))
            .sum()
    }

    /// Magnitude response in dB.
    pub fn gain_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.response(freq_hz).norm().log10()
    }
}

/// Smallest odd tap count meeting the Hamming transition-width rule.
pub fn tap_count(sample_rate_hz: f64, transition_hz: f64) -> usize {
    let n = (HAMMING_TRANSITION_FACTOR * sample_rate_hz / transition_hz).ceil() as usize;
    if n % 2 == 0 { n + 1 } else { n.max(3) }
}

fn hamming(n: usize, len: usize) -> f64 {
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) }
}

/// Designs a Hamming-windowed sinc kernel.
///
/// The low-pass is normalized to unit DC gain. The high-pass is the spectral
/// inversion of the low-pass at the same cutoff, so its taps sum to zero.
/// Either way the amplitude at `cutoff_hz` is close to 1/2.
pub fn design_fir(
    kind: FilterKind,
    cutoff_hz: f64,
    sample_rate_hz: f64,
    transition_hz: f64,
) -> Result<FilterKernel, DesignError> {
    let nyquist_hz = sample_rate_hz / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
        return Err(DesignError::InvalidCutoff { cutoff_hz, nyquist_hz });
    }
    if !(transition_hz > 0.0 && transition_hz.is_finite()) {
        return Err(DesignError::InvalidTransition(transition_hz));
    }
    let len = tap_count(sample_rate_hz, transition_hz);
    let mid = (len - 1) / 2;
    let fc = cutoff_hz / sample_rate_hz;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| 2.0 * fc * sinc(2.0 * fc * (n as f64 - mid as f64)) * hamming(n, len))
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    if kind == FilterKind::HighPass {
        taps.iter_mut().for_each(|t| *t = -*t);
        taps[mid] += 1.0;
    }
    Ok(FilterKernel {
        taps,
        kind,
        cutoff_hz,
        sample_rate_hz,
    })
}

/// Mirror-reflects `x` by `pad` samples on each side, excluding the edge sample.
pub(crate) fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    assert!(pad < n, "reflection pad {pad} must be shorter than the signal ({n})");
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((1..=pad).map(|i| x[n - 1 - i]));
    out
}

/// FFT convolution of a fixed kernel against signals of one fixed length,
/// with mirror padding and delay compensation.
pub struct FirConvolver {
    kernel_spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    pad: usize,
    signal_len: usize,
}

impl FirConvolver {
    pub fn new(kernel: &FilterKernel, signal_len: usize) -> Self {
        let pad = kernel.delay();
        let padded = signal_len + 2 * pad;
        let size = (padded + kernel.len() - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_spectrum = vec![Complex::new(0.0, 0.0); size];
        for (slot, &t) in kernel_spectrum.iter_mut().zip(&kernel.taps) {
            slot.re = t;
        }
        forward.process(&mut kernel_spectrum);
        Self {
            kernel_spectrum,
            forward,
            inverse,
            pad,
            signal_len,
        }
    }

    /// Filters one channel. Output sample k aligns with input sample k.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.signal_len, "signal length differs from the planned length");
        let padded = reflect_pad(x, self.pad);
        let size = self.kernel_spectrum.len();
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (slot, &v) in buf.iter_mut().zip(&padded) {
            slot.re = v;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;
        // symmetric kernel: output k is full-convolution index k + 2 * delay
        let offset = 2 * self.pad;
        buf[offset..offset + self.signal_len]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }
}

/// Direct-form reference of [`FirConvolver::apply`], used to check the FFT path.
pub fn filter_direct(kernel: &FilterKernel, x: &[f64]) -> Vec<f64> {
    let pad = kernel.delay();
    let padded = reflect_pad(x, pad);
    (0..x.len())
        .map(|k| {
            kernel
                .taps
                .iter()
                .zip(&padded[k..k + kernel.len()])
                .map(|(h, v)| h * v)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tap_counts_follow_transition_rule() {
        assert_eq!(tap_count(256.0, 4.0), 213);
        assert_eq!(tap_count(256.0, 0.2), 4225);
        assert_eq!(tap_count(256.0, 256.0 * 3.3 / 10.0), 11);
    }

    #[test]
    fn kernels_are_symmetric_with_expected_sums() {
        let lp = design_fir(FilterKind::LowPass, 40.0, 256.0, 4.0).unwrap();
        let hp = design_fir(FilterKind::HighPass, 0.1, 256.0, 0.2).unwrap();
        for k in [&lp, &hp] {
            assert_eq!(k.len() % 2, 1);
            let n = k.len();
            for i in 0..n / 2 {
                assert!((k.taps[i] - k.taps[n - 1 - i]).abs() < 1e-15);
            }
        }
        assert!((lp.taps.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(hp.taps.iter().sum::<f64>().abs() < 1e-6);
    }

    #[test]
    fn design_rejects_bad_arguments() {
        assert!(matches!(
            design_fir(FilterKind::LowPass, 0.0, 256.0, 4.0),
            Err(DesignError::InvalidCutoff { .. })
        ));
        assert!(matches!(
            design_fir(FilterKind::LowPass, 128.0, 256.0, 4.0),
            Err(DesignError::InvalidCutoff { .. })
        ));
        assert!(matches!(
            design_fir(FilterKind::HighPass, 1.0, 256.0, 0.0),
            Err(DesignError::InvalidTransition(_))
        ));
    }

    #[test]
    fn fft_path_matches_direct_convolution() {
        let lp = design_fir(FilterKind::LowPass, 40.0, 256.0, 4.0).unwrap();
        let x: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64 - 50.0) * 0.7).collect();
        let fast = FirConvolver::new(&lp, x.len()).apply(&x);
        let slow = filter_direct(&lp, &x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn reflection_excludes_edge_sample() {
        assert_eq!(reflect_pad(&[1.0, 2.0, 3.0, 4.0], 2), vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]);
    }
}
