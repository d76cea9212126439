//! Browser bindings: FIR response curves, the spectrum of a synthetic
//! epoch, and the rank-sum test on typed-in samples.

use wasm_bindgen::prelude::*;

use drowsep::preprocess::{design_fir, epoch_signal, EpochFilter, FilterKind};
use drowsep::session::{Channel, EEG_SAMPLE_RATE_HZ};
use drowsep::spectral::{band_power, relative_band_power, Band, FeatureExtractor};
use drowsep::stats::{exact_rank_sum_p, rank_sum_test, ORACLE_MAX_N};
use drowsep::synth::{generate_session, SynthSpec};

fn msg(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Gain in dB of a designed kernel at `points` frequencies spread over 0..=`max_hz`.
#[wasm_bindgen]
pub struct FilterCurve {
    taps: usize,
    freqs: Vec<f64>,
    gains_db: Vec<f64>,
}

#[wasm_bindgen]
impl FilterCurve {
    #[wasm_bindgen(getter)]
    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn freqs(&self) -> Vec<f64> {
        self.freqs.clone()
    }

    pub fn gains_db(&self) -> Vec<f64> {
        self.gains_db.clone()
    }
}

#[wasm_bindgen]
pub fn filter_response(
    highpass: bool,
    cutoff_hz: f64,
    transition_hz: f64,
    max_hz: f64,
    points: usize,
) -> Result<FilterCurve, JsError> {
    filter_curve(highpass, cutoff_hz, transition_hz, max_hz, points).map_err(|e| JsError::new(&e))
}

pub fn filter_curve(
    highpass: bool,
    cutoff_hz: f64,
    transition_hz: f64,
    max_hz: f64,
    points: usize,
) -> Result<FilterCurve, String> {
    let kind = if highpass { FilterKind::HighPass } else { FilterKind::LowPass };
    let kernel = design_fir(kind, cutoff_hz, EEG_SAMPLE_RATE_HZ, transition_hz).map_err(msg)?;
    let points = points.max(2);
    let freqs: Vec<f64> = (0..points).map(|i| max_hz * i as f64 / (points - 1) as f64).collect();
    let gains_db = freqs.iter().map(|&f| kernel.gain_db(f).max(-200.0)).collect();
    Ok(FilterCurve { taps: kernel.len(), freqs, gains_db })
}

/// Welch spectrum and band powers of one filtered synthetic epoch (TP9).
#[wasm_bindgen]
pub struct EpochSpectrum {
    freqs: Vec<f64>,
    density: Vec<f64>,
    absolute: Vec<f64>,
    relative: Vec<f64>,
}

#[wasm_bindgen]
impl EpochSpectrum {
    pub fn freqs(&self) -> Vec<f64> {
        self.freqs.clone()
    }

    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }

    /// Absolute band powers in µV², delta to gamma.
    pub fn absolute(&self) -> Vec<f64> {
        self.absolute.clone()
    }

    pub fn relative(&self) -> Vec<f64> {
        self.relative.clone()
    }
}

/// Generates a drowsy epoch whose band amplitudes are the defaults scaled
/// by `multipliers` (delta to gamma), filters it and estimates its spectrum.
#[wasm_bindgen]
pub fn synthetic_spectrum(multipliers: &[f64], seed: u64) -> Result<EpochSpectrum, JsError> {
    epoch_spectrum(multipliers, seed).map_err(|e| JsError::new(&e))
}

pub fn epoch_spectrum(multipliers: &[f64], seed: u64) -> Result<EpochSpectrum, String> {
    if multipliers.len() != 5 {
        return Err("expected five band multipliers".into());
    }
    let mut spec = SynthSpec {
        n_intervals: 1,
        drowsy_fraction: 1.0,
        vehicle: None,
        ..SynthSpec::default()
    };
    for (band, &m) in Band::ALL.iter().zip(multipliers) {
        spec.drowsy_multipliers.set(*band, m);
    }
    let session = generate_session(&spec, seed).map_err(msg)?;
    let epoch = epoch_signal(&session.eeg, &session.labels)
        .epochs
        .pop()
        .ok_or("no epoch generated")?;
    let hp = design_fir(FilterKind::HighPass, 0.1, EEG_SAMPLE_RATE_HZ, 0.2).map_err(msg)?;
    let lp = design_fir(FilterKind::LowPass, 40.0, EEG_SAMPLE_RATE_HZ, 4.0).map_err(msg)?;
    let filtered = EpochFilter::new(&hp, &lp).map_err(msg)?.apply(&epoch).map_err(msg)?;
    let psd = FeatureExtractor::default()
        .psd(&filtered.samples[Channel::TP9.index()])
        .map_err(msg)?;
    let absolute = Band::ALL.iter().map(|&b| band_power(&psd, b)).collect();
    let relative = Band::ALL
        .iter()
        .map(|&b| relative_band_power(&psd, b))
        .collect::<Result<_, _>>()
        .map_err(msg)?;
    Ok(EpochSpectrum {
        freqs: psd.freqs_hz,
        density: psd.density,
        absolute,
        relative,
    })
}

#[wasm_bindgen]
pub struct RankSum {
    u: f64,
    p_value: f64,
    method: String,
    oracle_p: Option<f64>,
}

#[wasm_bindgen]
impl RankSum {
    #[wasm_bindgen(getter)]
    pub fn u(&self) -> f64 {
        self.u
    }

    #[wasm_bindgen(getter)]
    pub fn p_value(&self) -> f64 {
        self.p_value
    }

    #[wasm_bindgen(getter)]
    pub fn method(&self) -> String {
        self.method.clone()
    }

    /// Brute-force p-value, present when the pooled sample is small enough.
    #[wasm_bindgen(getter)]
    pub fn oracle_p(&self) -> Option<f64> {
        self.oracle_p
    }
}

fn parse_sample(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

pub fn rank_sum_text(a: &str, b: &str) -> Result<RankSum, String> {
    let a = parse_sample(a)?;
    let b = parse_sample(b)?;
    let r = rank_sum_test(&a, &b).map_err(|e| e.to_string())?;
    let oracle_p = (a.len() + b.len() <= ORACLE_MAX_N)
        .then(|| exact_rank_sum_p(&a, &b).ok())
        .flatten();
    Ok(RankSum {
        u: r.statistic,
        p_value: r.p_value,
        method: method_label(r.method),
        oracle_p,
    })
}

fn method_label(m: drowsep::stats::TestMethod) -> String {
    use drowsep::stats::TestMethod::*;
    match m {
        ExactEnumeration => "exact enumeration",
        NormalApprox => "normal approximation",
        KsLilliefors => "Lilliefors",
    }
    .to_string()
}

/// Rank-sum test of two comma or space separated samples.
#[wasm_bindgen]
pub fn rank_sum(a: &str, b: &str) -> Result<RankSum, JsError> {
    rank_sum_text(a, b).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_curve_hits_cutoff() {
        let c = filter_curve(false, 40.0, 4.0, 128.0, 257).unwrap();
        assert_eq!(c.taps(), 213);
        assert_eq!(c.freqs().len(), 257);
        // 40 Hz sits at index 80 on the 0.5 Hz grid
        assert!((c.gains_db()[80] + 6.0).abs() < 0.5);
        assert!(c.gains_db()[20].abs() < 0.05);
    }

    #[test]
    fn spectrum_follows_multipliers() {
        let base = epoch_spectrum(&[1.0; 5], 3).unwrap();
        let boosted = epoch_spectrum(&[1.0, 3.0, 1.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(base.freqs().len(), 513);
        let sum: f64 = base.relative().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(boosted.absolute()[1] > 4.0 * base.absolute()[1]);
        assert!(epoch_spectrum(&[1.0; 4], 3).is_err());
        assert!(epoch_spectrum(&[1.0, 0.0, 1.0, 1.0, 1.0], 3).is_err());
    }

    #[test]
    fn rank_sum_parses_and_checks_oracle() {
        let r = rank_sum_text("1, 2, 3", "4 5 6").unwrap();
        assert_eq!(r.u(), 0.0);
        assert!((r.p_value() - 0.1).abs() < 1e-12);
        assert_eq!(r.method(), "exact enumeration");
        assert!((r.oracle_p().unwrap() - 0.1).abs() < 1e-12);
        assert!(rank_sum_text("1, x", "2").is_err());
        assert!(rank_sum_text("", "2").is_err());
    }
}
