//! Alert-versus-drowsy separation analysis of short-session EEG and driving
//! simulator telemetry.
//!
//! The flow is [`ingest`] → [`preprocess`] → [`spectral`] / [`vehicle`] →
//! [`stats`], wired together by [`pipeline`]. [`synth`] produces seeded
//! sessions with known effects for end-to-end checks.

pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod preprocess;
pub mod session;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod vehicle;

pub use features::{FeatureMatrix, FeatureRow};
pub use pipeline::{analyze_cohort, CohortAnalysis, CohortReport, Pipeline, PipelineError, PipelineParams};
pub use session::{BinaryState, Channel, Session};
pub use stats::{SeparationReport, SeparationRow, TestMethod, TestResult};
pub use synth::{generate_session, SynthSpec};
