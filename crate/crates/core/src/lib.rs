//! Latency modelling for video see-through headsets with rolling-shutter
//! cameras and rolling-scan displays.
//!
//! The crate covers per-row scan timing ([`scanout`]), lens-distortion
//! remapping and static latency fields ([`optics`]), an event-driven
//! slice-compositor simulation ([`pipeline`]), eye-model projection geometry
//! ([`geometry`]) and psychometric fitting ([`psychometrics`]).

// `!(a < b)` comparisons deliberately reject NaN along with out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod export;
pub mod geometry;
pub mod optics;
pub mod pipeline;
pub mod presets;
pub mod psychometrics;
pub mod scanout;
pub mod time;

use thiserror::Error;

/// Any failure surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Scan(#[from] scanout::ScanError),
    #[error(transparent)]
    Optics(#[from] optics::OpticsError),
    #[error(transparent)]
    Pipeline(#[from] pipeline::PipelineError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Psychometrics(#[from] psychometrics::PsychometricsError),
    #[error(transparent)]
    Export(#[from] export::ExportError),
}

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for values the
    /// models reject (including malformed trial data), 4 for file errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Export(export::ExportError::Io { .. }) => 4,
            _ => 3,
        }
    }
}
