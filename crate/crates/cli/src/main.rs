use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drowsep::ingest::{
    load_session, read_manifest, write_eeg_csv, write_manifest, write_ord_csv, write_telemetry_csv,
    IngestError, ManifestError, SessionLoadError, SessionManifest,
};
use drowsep::pipeline::{Pipeline, PipelineError, PipelineParams};
use drowsep::preprocess::OutlierPooling;
use drowsep::session::{validate_session, Session};
use drowsep::synth::{generate_session, session_id, SynthSpec};
use drowsep::vehicle::AggregateMode;

#[derive(Parser)]
#[command(name = "drowsep", version, about = "Alert vs drowsy separation of EEG and vehicle features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every session in a manifest against the recording invariants.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run the full analysis and write the report and tables.
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        /// Cohort name recorded in the report; defaults to the manifest file stem.
        #[arg(long)]
        cohort: Option<String>,
    },
    /// Generate synthetic sessions in the ingest CSV formats.
    Synth {
        /// JSON synth spec; omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of sessions, seeded `seed`, `seed + 1`, ...
        #[arg(long, default_value_t = 1)]
        sessions: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-session feature matrices without running the tests.
    Features {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Average the absolute value of each telemetry signal.
    #[arg(long)]
    abs_mean: bool,
    /// Judge outliers per channel instead of pooled over channels.
    #[arg(long)]
    per_channel_outliers: bool,
}

impl RunArgs {
    fn params(&self) -> PipelineParams {
        PipelineParams {
            alpha: self.alpha,
            vehicle_mode: if self.abs_mean { AggregateMode::AbsMean } else { AggregateMode::Mean },
            outlier_pooling: if self.per_channel_outliers {
                OutlierPooling::PerChannel
            } else {
                OutlierPooling::Pooled
            },
            ..PipelineParams::default()
        }
    }
}

/// A failure carrying its exit status.
enum Failure {
    /// Analysis or validation failed.
    Analysis(String),
    /// Bad usage or unreadable input.
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Analysis(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Analysis(m) | Failure::Input(m) => m,
        }
    }
}

impl From<ManifestError> for Failure {
    fn from(e: ManifestError) -> Self {
        Failure::Input(format!("manifest: {e}"))
    }
}

impl From<SessionLoadError> for Failure {
    fn from(e: SessionLoadError) -> Self {
        match e.source {
            IngestError::Io(_) => Failure::Input(e.to_string()),
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidParam(_) => Failure::Input(e.to_string()),
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { manifest } => cmd_validate(&manifest),
        Command::Analyze { run, cohort } => cmd_analyze(&run, cohort),
        Command::Synth { spec, seed, sessions, out } => cmd_synth(spec.as_deref(), seed, sessions, &out),
        Command::Features { run } => cmd_features(&run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn cmd_validate(manifest: &Path) -> Result<(), Failure> {
    let entries = read_manifest(manifest)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut worst: Option<Failure> = None;
    for entry in &entries {
        match load_session(entry) {
            Err(e) => {
                let _ = writeln!(out, "{}: FAIL {e}", entry.session_id);
                let f = Failure::from(e);
                if worst.as_ref().is_none_or(|w| f.code() > w.code()) {
                    worst = Some(f);
                }
            }
            Ok(session) => {
                let report = validate_session(&session);
                if report.is_valid() {
                    let _ = writeln!(out, "{}: ok", entry.session_id);
                } else {
                    let _ = writeln!(out, "{}: FAIL {} violations", entry.session_id, report.violations.len());
                    for v in &report.violations {
                        let _ = writeln!(out, "  {v}");
                    }
                    worst.get_or_insert(Failure::Analysis("validation failed".into()));
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(Failure::Analysis(_)) => Err(Failure::Analysis("one or more sessions failed validation".into())),
        Some(f) => Err(f),
    }
}

fn load_all(entries: &[SessionManifest]) -> Result<Vec<Session>, Failure> {
    entries.iter().map(|e| load_session(e).map_err(Failure::from)).collect()
}

/// Writes every file only after all of them were rendered.
fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn cmd_analyze(run: &RunArgs, cohort: Option<String>) -> Result<(), Failure> {
    let pipeline = Pipeline::new(run.params())?;
    let sessions = load_all(&read_manifest(&run.manifest)?)?;
    let cohort = cohort.unwrap_or_else(|| {
        run.manifest
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "cohort".into())
    });
    let analysis = pipeline.analyze(&sessions, &cohort)?;
    let report = &analysis.report;
    let mut files = vec![("report.json".to_string(), report.to_json().into_bytes())];
    files.extend(report.table_csvs().into_iter().map(|(n, s)| (n, s.into_bytes())));
    write_outputs(&run.out, &files)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let d = &report.denoise_table;
    println!(
        "{} sessions, {} of {} epochs kept ({:.2}% removed); report in {}",
        report.sessions,
        d.post_total,
        d.pre_total,
        d.removal_percent,
        run.out.display()
    );
    Ok(())
}

fn cmd_features(run: &RunArgs) -> Result<(), Failure> {
    let pipeline = Pipeline::new(run.params())?;
    let sessions = load_all(&read_manifest(&run.manifest)?)?;
    let mut files = Vec::new();
    for s in pipeline.cohort_features(&sessions)? {
        let mut eeg = Vec::new();
        s.eeg.write_csv(&mut eeg).expect("in-memory write");
        files.push((format!("{}_eeg_features.csv", s.session_id), eeg));
        if let Some(v) = &s.vehicle {
            let mut buf = Vec::new();
            v.write_csv(&mut buf).expect("in-memory write");
            files.push((format!("{}_vehicle_features.csv", s.session_id), buf));
        }
        for w in &s.warnings {
            eprintln!("warning: {w}");
        }
    }
    write_outputs(&run.out, &files)?;
    println!("wrote {} feature files to {}", files.len(), run.out.display());
    Ok(())
}

fn cmd_synth(spec_path: Option<&Path>, seed: u64, count: u64, out: &Path) -> Result<(), Failure> {
    let spec = match spec_path {
        None => SynthSpec::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?
        }
    };
    spec.validate().map_err(|e| Failure::Input(e.to_string()))?;
    if count == 0 {
        return Err(Failure::Input("--sessions must be at least 1".into()));
    }
    let mut files = Vec::new();
    let mut manifest = Vec::new();
    for s in seed..seed.saturating_add(count) {
        let session = generate_session(&spec, s).map_err(|e| Failure::Input(e.to_string()))?;
        let id = session_id(s);
        let render = |f: &dyn Fn(&mut Vec<u8>) -> io::Result<()>| {
            let mut buf = Vec::new();
            f(&mut buf).expect("in-memory write");
            buf
        };
        let eeg_name = format!("{id}_eeg.csv");
        let labels_name = format!("{id}_labels.csv");
        files.push((eeg_name.clone(), render(&|b| write_eeg_csv(&session.eeg, b))));
        let telemetry_name = session.telemetry.as_ref().map(|t| {
            let name = format!("{id}_telemetry.csv");
            files.push((name.clone(), render(&|b| write_telemetry_csv(t, b))));
            name
        });
        files.push((labels_name.clone(), render(&|b| write_ord_csv(&session.labels, b))));
        manifest.push(SessionManifest {
            session_id: id,
            eeg_path: eeg_name.into(),
            telemetry_path: telemetry_name.map(PathBuf::from),
            labels_path: labels_name.into(),
        });
    }
    let mut text = b"# session_id,eeg,telemetry,labels\n".to_vec();
    write_manifest(&manifest, &mut text).expect("in-memory write");
    files.push(("manifest.txt".into(), text));
    write_outputs(out, &files)?;
    println!("wrote {} sessions to {}", count, out.display());
    Ok(())
}
