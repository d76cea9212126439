//! Text formats for sessions and cohorts.
//!
//! All files are comma-separated, `.` decimal separator, one record per
//! line, first line an exact header:
//!
//! | file      | header                                           |
//! |-----------|--------------------------------------------------|
//! | EEG       | `t,TP9,AF7,AF8,TP10`                             |
//! | telemetry | `t,steer_angle,steer_speed,lane_deviation,torque` |
//! | labels    | `interval,rater1,rater2,rater3`                  |
//!
//! A cohort manifest has no header and one `session_id,eeg_path,telemetry_path,labels_path`
//! line per session; `telemetry_path` may be empty. Relative paths resolve against the
//! manifest's directory. Row numbers in errors count data rows from 1, header excluded.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::session::{
    EegRecording, OrdInterval, OrdLabelTrack, Session, VehicleTelemetry, EEG_SAMPLE_RATE_HZ,
    MAX_RATING, MIN_RATING,
};

pub const EEG_HEADER: [&str; 5] = ["t", "TP9", "AF7", "AF8", "TP10"];
pub const TELEMETRY_HEADER: [&str; 5] = ["t", "steer_angle", "steer_speed", "lane_deviation", "torque"];
pub const LABELS_HEADER: [&str; 4] = ["interval", "rater1", "rater2", "rater3"];

/// Relative tolerance on telemetry time steps around the median step.
pub const TIMESTEP_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file is empty")]
    EmptyFile,
    #[error("first line is data, expected a header")]
    MissingHeader,
    #[error("header `{found}` does not match `{expected}`")]
    WrongColumnSet { expected: String, found: String },
    #[error("non-numeric value in row {0}")]
    NonNumericValue(usize),
    #[error("row {0} has the wrong number of fields")]
    InconsistentRowLength(usize),
    #[error("time step before row {0} deviates more than 1% from the median step")]
    NonUniformTimestep(usize),
    #[error("need at least two rows to infer a sample rate")]
    TooFewRows,
    #[error("interval {found} follows where {expected} was expected")]
    GapInIntervals { expected: usize, found: usize },
    #[error("rating {value} in row {row} is outside 1..=5")]
    InvalidRating { row: usize, value: i64 },
    #[error("row {0} has fewer than three ratings")]
    MissingRater(usize),
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads all records, checks the header, and returns the data rows.
fn read_table<R: Read>(source: R, header: &[&str]) -> Result<Vec<csv::StringRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();
    let first = match records.next() {
        None => return Err(IngestError::EmptyFile),
        Some(r) => r?,
    };
    let found: Vec<&str> = first.iter().collect();
    if found != header {
        if found.first().is_some_and(|f| f.trim().parse::<f64>().is_ok()) {
            return Err(IngestError::MissingHeader);
        }
        return Err(IngestError::WrongColumnSet {
            expected: header.join(","),
            found: found.join(","),
        });
    }
    records.map(|r| r.map_err(IngestError::from)).collect()
}

fn parse_row(record: &csv::StringRecord, row: usize, width: usize) -> Result<Vec<f64>, IngestError> {
    if record.len() != width {
        return Err(IngestError::InconsistentRowLength(row));
    }
    record
        .iter()
        .map(|field| {
            field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or(IngestError::NonNumericValue(row))
        })
        .collect()
}

/// Parses an EEG recording. Sample order is row order; the `t` column is
/// informational apart from its first value, which sets the start time.
pub fn load_eeg_csv<R: Read>(source: R) -> Result<EegRecording, IngestError> {
    let rows = read_table(source, &EEG_HEADER)?;
    if rows.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let mut channels: [Vec<f64>; 4] = Default::default();
    for ch in channels.iter_mut() {
        ch.reserve(rows.len());
    }
    let mut start_time_s = 0.0;
    for (i, record) in rows.iter().enumerate() {
        let values = parse_row(record, i + 1, EEG_HEADER.len())?;
        if i == 0 {
            start_time_s = values[0];
        }
        for (ch, v) in channels.iter_mut().zip(&values[1..]) {
            ch.push(*v);
        }
    }
    Ok(EegRecording::new(channels, start_time_s))
}

/// Parses vehicle telemetry, inferring the sample rate from the median time step.
pub fn load_telemetry_csv<R: Read>(source: R) -> Result<VehicleTelemetry, IngestError> {
    let rows = read_table(source, &TELEMETRY_HEADER)?;
    if rows.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let mut t = Vec::with_capacity(rows.len());
    let mut series: [Vec<f64>; 4] = Default::default();
    for (i, record) in rows.iter().enumerate() {
        let values = parse_row(record, i + 1, TELEMETRY_HEADER.len())?;
        t.push(values[0]);
        for (s, v) in series.iter_mut().zip(&values[1..]) {
            s.push(*v);
        }
    }
    if t.len() < 2 {
        return Err(IngestError::TooFewRows);
    }
    let steps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    if median <= 0.0 {
        return Err(IngestError::NonUniformTimestep(2));
    }
    if let Some(bad) = steps
        .iter()
        .position(|s| ((s - median) / median).abs() > TIMESTEP_TOLERANCE)
    {
        return Err(IngestError::NonUniformTimestep(bad + 2));
    }
    let [steer_angle, steer_speed, lane_deviation, torque] = series;
    Ok(VehicleTelemetry {
        sample_rate_hz: 1.0 / median,
        steer_angle,
        steer_speed,
        lane_deviation,
        torque,
        start_time_s: t[0],
    })
}

/// Parses the three-rater label track. Intervals must run 0, 1, 2, ...
pub fn load_ord_csv<R: Read>(source: R) -> Result<OrdLabelTrack, IngestError> {
    let rows = read_table(source, &LABELS_HEADER)?;
    let mut intervals = Vec::with_capacity(rows.len());
    for (i, record) in rows.iter().enumerate() {
        let row = i + 1;
        if record.len() < LABELS_HEADER.len() {
            return Err(IngestError::MissingRater(row));
        }
        if record.len() > LABELS_HEADER.len() {
            return Err(IngestError::InconsistentRowLength(row));
        }
        let ints = record
            .iter()
            .map(|f| f.trim().parse::<i64>().map_err(|_| IngestError::NonNumericValue(row)))
            .collect::<Result<Vec<_>, _>>()?;
        let index = usize::try_from(ints[0]).map_err(|_| IngestError::NonNumericValue(row))?;
        if index != i {
            return Err(IngestError::GapInIntervals {
                expected: i,
                found: index,
            });
        }
        let mut ratings = [0u8; 3];
        for (slot, &value) in ratings.iter_mut().zip(&ints[1..]) {
            if !(MIN_RATING as i64..=MAX_RATING as i64).contains(&value) {
                return Err(IngestError::InvalidRating { row, value });
            }
            *slot = value as u8;
        }
        intervals.push(OrdInterval { index, ratings });
    }
    Ok(OrdLabelTrack::new(intervals))
}

pub fn write_eeg_csv<W: Write>(recording: &EegRecording, sink: W) -> io::Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "{}", EEG_HEADER.join(","))?;
    let rate = if recording.sample_rate_hz > 0.0 {
        recording.sample_rate_hz
    } else {
        EEG_SAMPLE_RATE_HZ
    };
    for i in 0..recording.len() {
        write!(out, "{}", recording.start_time_s + i as f64 / rate)?;
        for ch in &recording.samples {
            write!(out, ",{}", ch[i])?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn write_telemetry_csv<W: Write>(telemetry: &VehicleTelemetry, sink: W) -> io::Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "{}", TELEMETRY_HEADER.join(","))?;
    for i in 0..telemetry.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            telemetry.time_of(i),
            telemetry.steer_angle[i],
            telemetry.steer_speed[i],
            telemetry.lane_deviation[i],
            telemetry.torque[i]
        )?;
    }
    out.flush()
}

pub fn write_ord_csv<W: Write>(labels: &OrdLabelTrack, sink: W) -> io::Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "{}", LABELS_HEADER.join(","))?;
    for iv in &labels.intervals {
        let [a, b, c] = iv.ratings;
        writeln!(out, "{},{a},{b},{c}", iv.index)?;
    }
    out.flush()
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionManifest {
    pub session_id: String,
    pub eeg_path: PathBuf,
    pub telemetry_path: Option<PathBuf>,
    pub labels_path: PathBuf,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest line {line}: expected 4 comma-separated fields")]
    FieldCount { line: usize },
    #[error("manifest line {line}: empty {field}")]
    EmptyField { line: usize, field: &'static str },
    #[error("manifest line {line}: duplicate session id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("manifest lists no sessions")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses manifest text. Blank lines and lines starting with `#` are skipped.
/// Relative paths are joined onto `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<SessionManifest>, ManifestError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(ManifestError::FieldCount { line });
        }
        for (field, name) in [(fields[0], "session_id"), (fields[1], "eeg_path"), (fields[3], "labels_path")] {
            if field.is_empty() {
                return Err(ManifestError::EmptyField { line, field: name });
            }
        }
        let id = fields[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(ManifestError::DuplicateId { line, id });
        }
        entries.push(SessionManifest {
            session_id: id,
            eeg_path: base_dir.join(fields[1]),
            telemetry_path: (!fields[2].is_empty()).then(|| base_dir.join(fields[2])),
            labels_path: base_dir.join(fields[3]),
        });
    }
    if entries.is_empty() {
        return Err(ManifestError::Empty);
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<SessionManifest>, ManifestError> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

/// Writes manifest lines with paths exactly as given.
pub fn write_manifest<W: Write>(entries: &[SessionManifest], mut sink: W) -> io::Result<()> {
    for e in entries {
        writeln!(
            sink,
            "{},{},{},{}",
            e.session_id,
            e.eeg_path.display(),
            e.telemetry_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            e.labels_path.display()
        )?;
    }
    Ok(())
}

/// A load failure tied to the file that caused it.
#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct SessionLoadError {
    pub path: PathBuf,
    #[source]
    pub source: IngestError,
}

fn open_with<T>(path: &Path, load: impl FnOnce(BufReader<File>) -> Result<T, IngestError>) -> Result<T, SessionLoadError> {
    let wrap = |source| SessionLoadError {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| wrap(IngestError::Io(e)))?;
    load(BufReader::new(file)).map_err(wrap)
}

pub fn load_session(entry: &SessionManifest) -> Result<Session, SessionLoadError> {
    let eeg = open_with(&entry.eeg_path, load_eeg_csv)?;
    let telemetry = entry
        .telemetry_path
        .as_deref()
        .map(|p| open_with(p, load_telemetry_csv))
        .transpose()?;
    let labels = open_with(&entry.labels_path, load_ord_csv)?;
    Ok(Session {
        id: entry.session_id.clone(),
        eeg,
        telemetry,
        labels,
    })
}
