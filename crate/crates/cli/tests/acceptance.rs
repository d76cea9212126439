//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion outside `KNOWN_FAILURES` fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use drowsep::pipeline::{analyze_cohort, Pipeline, PipelineParams};
use drowsep::preprocess::{design_fir, DenoiseSummary, Epoch, FilterKind};
use drowsep::session::{BinaryState, Channel, EEG_SAMPLE_RATE_HZ, EPOCH_SAMPLES};
use drowsep::spectral::{feature_name, Band, FeatureExtractor, PowerKind};
use drowsep::stats::{exact_rank_sum_p, rank_sum_test_with, PValuePath};
use drowsep::synth::{generate_session, SignalSpec, SynthSpec, VehicleSpec};

type Outcome = Result<String, String>;

/// Criteria that cannot hold for a correct implementation, with the reason.
/// They still run at full strength and still print FAIL.
const KNOWN_FAILURES: &[(usize, &str)] = &[(
    2,
    "the continuity-corrected normal approximation is 0.0375 off the exact p for n_a = n_b = 3, U = 3 (0.6625 vs 0.7)",
)];

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn table_one_arithmetic() -> Outcome {
    let d = DenoiseSummary::from_counts(1058, 2986, 998, 2814).map_err(|e| e.to_string())?;
    let pct = d.removal_percent();
    check(
        d.pre_total() == 4044 && d.post_total() == 3812 && (pct - 5.73).abs() <= 0.01,
        format!("totals {}/{}, removal {pct:.4}% ({})", d.pre_total(), d.post_total(), d.removal_percent_text()),
    )
}

/// Distinct integers drawn without replacement, split into two groups.
fn tie_free_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let na = rng.random_range(3..=6);
    let nb = rng.random_range(3..=6);
    let mut pool: Vec<i64> = Vec::new();
    while pool.len() < na + nb {
        let v = rng.random_range(-50..=50);
        if !pool.contains(&v) {
            pool.push(v);
        }
    }
    let vals: Vec<f64> = pool.into_iter().map(|v| v as f64).collect();
    (vals[..na].to_vec(), vals[na..].to_vec())
}

fn rank_sum_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_exact, mut worst_approx) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (a, b) = tie_free_pair(&mut rng);
        let oracle = exact_rank_sum_p(&a, &b).map_err(|e| e.to_string())?;
        let exact = rank_sum_test_with(&a, &b, PValuePath::Exact).map_err(|e| e.to_string())?;
        let approx = rank_sum_test_with(&a, &b, PValuePath::NormalApprox).map_err(|e| e.to_string())?;
        worst_exact = worst_exact.max((exact.p_value - oracle).abs());
        worst_approx = worst_approx.max((approx.p_value - oracle).abs());
    }
    check(
        worst_exact <= 1e-12 && worst_approx <= 0.03,
        format!("max |exact - oracle| = {worst_exact:.2e}, max |approx - exact| = {worst_approx:.4}"),
    )
}

fn parseval() -> Outcome {
    let fx = FeatureExtractor::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut sum) = (0.0f64, 0.0);
    for _ in 0..100 {
        let sd = rng.random_range(1.0..50.0);
        let x: Vec<f64> = (0..EPOCH_SAMPLES).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let ratio = fx.psd(&x).map_err(|e| e.to_string())?.total_power() / ms;
        worst = worst.max((ratio - 1.0).abs());
        sum += ratio;
    }
    let mean = sum / 100.0;
    check(
        worst <= 0.10 && (mean - 1.0).abs() <= 0.02,
        format!("worst epoch off by {:.2}%, mean ratio {mean:.4}", 100.0 * worst),
    )
}

fn filter_responses() -> Outcome {
    let fs = EEG_SAMPLE_RATE_HZ;
    let lp = design_fir(FilterKind::LowPass, 40.0, fs, 4.0).map_err(|e| e.to_string())?;
    let hp = design_fir(FilterKind::HighPass, 0.1, fs, 0.2).map_err(|e| e.to_string())?;
    let g10 = lp.gain_db(10.0);
    let g50 = lp.gain_db(50.0);
    let dc = hp.gain_db(0.0);
    let lp_cut = lp.gain_db(40.0);
    let hp_cut = hp.gain_db(0.1);
    let ok = g10.abs() <= 0.05
        && g50 <= -40.0
        && dc <= -60.0
        && (lp_cut + 6.0).abs() <= 0.5
        && (hp_cut + 6.0).abs() <= 0.5;
    check(
        ok,
        format!(
            "LP {} taps: 10 Hz {g10:+.4} dB, 50 Hz {g50:.1} dB, 40 Hz {lp_cut:.2} dB; HP {} taps: DC {dc:.1} dB, 0.1 Hz {hp_cut:.2} dB",
            lp.len(),
            hp.len()
        ),
    )
}

fn relative_power() -> Outcome {
    let fx = FeatureExtractor::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let samples: [Vec<f64>; 4] = std::array::from_fn(|_| {
            let sd = rng.random_range(0.5..40.0);
            let tone_amp = rng.random_range(0.0..60.0);
            let tone_hz = rng.random_range(0.5..45.0);
            let drift = rng.random_range(-20.0..20.0);
            (0..EPOCH_SAMPLES)
                .map(|n| {
                    let t = n as f64 / EEG_SAMPLE_RATE_HZ;
                    sd * rng.sample::<f64, _>(StandardNormal)
                        + tone_amp * (2.0 * std::f64::consts::PI * tone_hz * t).sin()
                        + drift
                })
                .collect()
        });
        let epoch = Epoch { interval_index: i, state: BinaryState::Alert, samples, filtered: true };
        let fv = fx.extract(&epoch).map_err(|e| e.to_string())?;
        for ch in Channel::ALL {
            let sum: f64 = Band::ALL.iter().map(|&b| fv.get(ch, b, PowerKind::Relative)).sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    let tone: Vec<f64> = (0..EPOCH_SAMPLES)
        .map(|n| 20.0 * (2.0 * std::f64::consts::PI * 10.0 * n as f64 / EEG_SAMPLE_RATE_HZ).sin())
        .collect();
    let epoch = Epoch {
        interval_index: 0,
        state: BinaryState::Alert,
        samples: std::array::from_fn(|_| tone.clone()),
        filtered: true,
    };
    let alpha = fx.extract(&epoch).map_err(|e| e.to_string())?.get(Channel::TP9, Band::Alpha, PowerKind::Relative);
    check(
        worst <= 1e-9 && alpha >= 0.95,
        format!("max |sum - 1| = {worst:.2e}, 10 Hz tone alpha relative {alpha:.4}"),
    )
}

fn effect_spec() -> SynthSpec {
    let mut spec = SynthSpec::default();
    spec.drowsy_multipliers.theta = 1.5;
    spec.drowsy_multipliers.beta = 1.75;
    spec.drowsy_multipliers.gamma = 2.0;
    let base = VehicleSpec::default();
    spec.vehicle = Some(VehicleSpec {
        steer_angle: SignalSpec { drowsy_shift: 2.0, ..base.steer_angle },
        torque: SignalSpec { drowsy_shift: 0.5, ..base.torque },
        ..base
    });
    spec
}

fn effect_detection() -> Outcome {
    let spec = effect_spec();
    let sessions: Vec<_> = (0..48).map(|s| generate_session(&spec, s).unwrap()).collect();
    let report = analyze_cohort(&sessions, &PipelineParams::default(), "effect")
        .map_err(|e| e.to_string())?
        .report;
    let mut worst_target = 0.0f64;
    for band in [Band::Theta, Band::Beta, Band::Gamma] {
        for ch in Channel::ALL {
            let row = report.row(&feature_name(ch, band, PowerKind::Absolute)).ok_or("missing row")?;
            worst_target = worst_target.max(row.p_value);
        }
    }
    let speed = report.row("steer_speed").ok_or("missing steer_speed")?.p_value;
    let min_eeg = report.eeg_absolute.iter().map(|r| r.p_value).fold(f64::INFINITY, f64::min);
    let min_vehicle = report.vehicle.iter().map(|r| r.p_value).fold(f64::INFINITY, f64::min);
    check(
        worst_target < 1e-6 && speed > 0.05 && min_eeg < min_vehicle,
        format!(
            "{} epochs; max theta/beta/gamma abs p {worst_target:.2e}, steer_speed p {speed:.4}, min EEG p {min_eeg:.2e} vs min vehicle p {min_vehicle:.2e}",
            report.denoise_table.post_total
        ),
    )
}

fn null_calibration() -> Outcome {
    let spec = SynthSpec::default();
    let pipeline = Pipeline::new(PipelineParams::default()).map_err(|e| e.to_string())?;
    let mut fractions = Vec::new();
    for seed in 0..50u64 {
        let sessions: Vec<_> = (0..4).map(|k| generate_session(&spec, seed * 1000 + k).unwrap()).collect();
        let report = pipeline.analyze(&sessions, "null").map_err(|e| e.to_string())?.report;
        fractions.push(report.significant_fraction());
    }
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    check(
        (0.02..=0.08).contains(&mean),
        format!("mean significant fraction {mean:.4} over 50 cohorts of 4 sessions"),
    )
}

fn run(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_drowsep"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("drowsep {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    fs::write(tmp.path().join("spec.json"), r#"{"n_intervals": 12}"#).map_err(|e| e.to_string())?;
    for dir in ["a", "b"] {
        run(&["synth", "--spec", &p("spec.json"), "--seed", "5", "--sessions", "2", "--out", &p(dir)])?;
    }
    let (a, b) = (dir_contents(&tmp.path().join("a")), dir_contents(&tmp.path().join("b")));
    let synth_same = a == b && a.len() == 7;
    let manifest = tmp.path().join("a").join("manifest.txt").to_string_lossy().into_owned();
    for dir in ["r1", "r2"] {
        run(&["analyze", "--manifest", &manifest, "--out", &p(dir)])?;
    }
    let r1 = fs::read(tmp.path().join("r1/report.json")).map_err(|e| e.to_string())?;
    let r2 = fs::read(tmp.path().join("r2/report.json")).map_err(|e| e.to_string())?;
    check(
        synth_same && r1 == r2,
        format!("synth files identical: {synth_same} ({} files); report.json identical: {} ({} bytes)", a.len(), r1 == r2, r1.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("denoise table arithmetic", table_one_arithmetic),
        ("rank-sum oracle equivalence", rank_sum_oracle),
        ("Welch PSD Parseval", parseval),
        ("FIR frequency responses", filter_responses),
        ("relative power normalization", relative_power),
        ("effect detection", effect_detection),
        ("null calibration", null_calibration),
        ("CLI determinism", determinism),
    ];
    let (mut failed, mut unexpected) = (0, 0);
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {detail} ({secs:.1}s)");
                match KNOWN_FAILURES.iter().find(|(k, _)| *k == id) {
                    Some((_, why)) => println!("     known failure: {why}"),
                    None => unexpected += 1,
                }
            }
        }
    }
    println!(
        "{} of {} criteria passed, {} known failures, {unexpected} unexpected",
        criteria.len() - failed,
        criteria.len(),
        failed - unexpected
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
