//! Camera/display distortion composition and the per-pixel buffer latency it
//! induces.
//!
//! Distortion correction bends display rows into curves in camera space, so a
//! display row can only be composited once the *last* camera row it samples
//! has been read out. [`buffer_latency_field`] measures that slack for every
//! display pixel; [`select_phase_offset`] picks the camera trigger advance
//! that makes it non-negative and [`required_buffer`] converts the remaining
//! spread into camera rows.

mod field;
mod mapping;
mod profile;

pub use field::{buffer_latency_field, required_buffer, select_phase_offset, LatencyField};
pub use mapping::{build_mapping, build_mapping_from, Dims, OpticalCenters, PixelMapping, Remap};
pub use profile::{DistortionProfile, ProfileKind};

use thiserror::Error;

use crate::time::Nanos;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("invalid distortion profile: {0}")]
    InvalidProfile(String),
    #[error("distortion profile is not strictly increasing near {angle:.4} rad")]
    NonMonotoneProfile { angle: f64 },
    #[error("{image} optical center ({}, {}) lies outside the image", center.0, center.1)]
    CenterOutsideImage { image: &'static str, center: (f64, f64) },
    #[error("{0} image has zero size")]
    EmptyImage(&'static str),
    #[error("mapping stride must be at least 1")]
    ZeroStride,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("latency field has no valid pixels")]
    EmptyField,
    #[error("field minimum {0} ms is negative; apply the phase offset first")]
    PhaseNotApplied(Nanos),
}
