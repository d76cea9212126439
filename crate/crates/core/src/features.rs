//! Per-epoch feature tables pooled across sessions.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::session::{BinaryState, VehicleSignal};
use crate::spectral::{eeg_feature_names, FeatureVector};
use crate::vehicle::VehicleFeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub session_id: String,
    pub interval_index: usize,
    pub state: BinaryState,
    pub values: Vec<f64>,
}

/// Rows of equal-length feature vectors with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

pub fn vehicle_feature_names() -> Vec<String> {
    VehicleSignal::ALL.iter().map(|s| s.name().to_string()).collect()
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, rows: Vec::new() }
    }

    pub fn eeg() -> Self {
        Self::new(eeg_feature_names())
    }

    pub fn vehicle() -> Self {
        Self::new(vehicle_feature_names())
    }

    pub fn push_eeg(&mut self, session_id: &str, fv: &FeatureVector) {
        self.push(session_id, fv.interval_index, fv.state, fv.values.clone());
    }

    pub fn push_vehicle(&mut self, session_id: &str, fv: &VehicleFeatureVector) {
        self.push(session_id, fv.interval_index, fv.state, fv.values.to_vec());
    }

    pub fn push(&mut self, session_id: &str, interval_index: usize, state: BinaryState, values: Vec<f64>) {
        assert_eq!(values.len(), self.names.len(), "feature vector width mismatch");
        self.rows.push(FeatureRow {
            session_id: session_id.to_string(),
            interval_index,
            state,
            values,
        });
    }

    pub fn extend(&mut self, other: FeatureMatrix) {
        assert_eq!(self.names, other.names, "cannot merge matrices with different columns");
        self.rows.extend(other.rows);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, state: BinaryState) -> usize {
        self.rows.iter().filter(|r| r.state == state).count()
    }

    /// Column `j` split into (alert, drowsy) values, row order preserved.
    pub fn split_column(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let mut alert = Vec::new();
        let mut drowsy = Vec::new();
        for row in &self.rows {
            match row.state {
                BinaryState::Alert => alert.push(row.values[j]),
                BinaryState::Drowsy => drowsy.push(row.values[j]),
            }
        }
        (alert, drowsy)
    }

    /// Rows of one session.
    pub fn session(&self, session_id: &str) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            rows: self.rows.iter().filter(|r| r.session_id == session_id).cloned().collect(),
        }
    }

    /// Writes `interval,state,<names...>`, one row per epoch.
    pub fn write_csv<W: Write>(&self, sink: W) -> io::Result<()> {
        let mut out = io::BufWriter::new(sink);
        writeln!(out, "interval,state,{}", self.names.join(","))?;
        for row in &self.rows {
            write!(out, "{},{}", row.interval_index, row.state)?;
            for v in &row.values {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}
