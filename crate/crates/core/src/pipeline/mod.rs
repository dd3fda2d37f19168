//! Discrete-event simulation of a slice compositor racing the display scan.
//!
//! The camera writes rows into a single locked frame buffer as they finish
//! exposure; the compositor dispatches each display slice `render_lead` ahead
//! of the slice's first emitted row and the display emits rows with rolling
//! persistence. A dispatch that completes after a row has started emitting
//! leaves that row showing the previous frame (a tear), as does a dispatch
//! that samples a camera row the sensor has not rewritten yet.

mod composite;
mod probe;
mod sim;
pub mod stress;
mod tearing;

pub use composite::{
    composite_slice, required_camera_rows, CameraFrame, CfaPattern, ColorParams, RgbImage,
    RowBuffer,
};
pub use probe::led_pulse_probe;
pub use sim::{simulate, EventKind, SimTrace, TraceEvent};
pub use tearing::{detect_tearing, read_shared_buffer, SharedBufferRead};

use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{self, OpticsError, PixelMapping};
use crate::scanout::{ScanRole, ScanSpec};
use crate::time::Nanos;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("camera buffer of {configured} rows is smaller than the {required} rows the mapping needs")]
    InsufficientBuffer { configured: u64, required: u64 },
    #[error("camera row {0} is not in the row buffer")]
    MissingCameraRow(u32),
    #[error("no composited frame reached the display within the simulated frames")]
    NoContent,
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    Sliced,
    FullFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterKind {
    None,
    Uniform,
    Spike,
}

/// Compositor dispatch-duration model.
///
/// `None` always takes `base_dispatch`. `Uniform` draws uniformly from
/// `[base_dispatch, worst_case]`. `Spike` takes `worst_case` with
/// `spike_probability` and `base_dispatch` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterModel {
    pub kind: JitterKind,
    pub base_dispatch: Nanos,
    pub worst_case: Nanos,
    pub spike_probability: f64,
    /// Default seed for front ends that do not supply one.
    pub seed: u64,
}

impl JitterModel {
    pub fn none(base_dispatch: Nanos) -> Self {
        Self {
            kind: JitterKind::None,
            base_dispatch,
            worst_case: base_dispatch,
            spike_probability: 0.0,
            seed: 0,
        }
    }

    pub fn spike(base_dispatch: Nanos, worst_case: Nanos, spike_probability: f64) -> Self {
        Self { kind: JitterKind::Spike, base_dispatch, worst_case, spike_probability, seed: 0 }
    }

    pub fn uniform(base_dispatch: Nanos, worst_case: Nanos) -> Self {
        Self { kind: JitterKind::Uniform, base_dispatch, worst_case, spike_probability: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.base_dispatch < Nanos::ZERO {
            return Err(PipelineError::Config("base dispatch must be non-negative".into()));
        }
        if self.base_dispatch > self.worst_case {
            return Err(PipelineError::Config(format!(
                "base dispatch {} ms exceeds worst case {} ms",
                self.base_dispatch, self.worst_case
            )));
        }
        if !(0.0..=1.0).contains(&self.spike_probability) {
            return Err(PipelineError::Config(format!(
                "spike probability {} outside [0, 1]",
                self.spike_probability
            )));
        }
        Ok(())
    }

    /// Largest duration a dispatch can take under this model.
    pub fn worst(&self) -> Nanos {
        match self.kind {
            JitterKind::None => self.base_dispatch,
            JitterKind::Uniform => self.worst_case,
            JitterKind::Spike if self.spike_probability > 0.0 => self.worst_case,
            JitterKind::Spike => self.base_dispatch,
        }
    }
}

/// Seeded sampler of dispatch durations.
pub(crate) struct JitterSampler {
    model: JitterModel,
    rng: ChaCha8Rng,
}

impl JitterSampler {
    pub(crate) fn new(model: JitterModel, seed: u64) -> Self {
        Self { model, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub(crate) fn sample(&mut self) -> Nanos {
        let m = &self.model;
        match m.kind {
            JitterKind::None => m.base_dispatch,
            JitterKind::Uniform => Nanos(self.rng.random_range(m.base_dispatch.get()..=m.worst_case.get())),
            JitterKind::Spike => {
                if self.rng.random_bool(m.spike_probability) {
                    m.worst_case
                } else {
                    m.base_dispatch
                }
            }
        }
    }
}

/// Everything the simulator needs about one passthrough pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub camera: ScanSpec,
    pub display: ScanSpec,
    pub mapping: Arc<PixelMapping>,
    /// How far ahead of a slice's first emitted row its dispatch is issued.
    pub render_lead: Nanos,
    /// Target scan time covered by one slice; sets rows per slice.
    pub slice_budget: Nanos,
    /// Camera rows retained ahead of compositing.
    pub buffer_rows: u64,
    pub mode: PipelineMode,
    pub jitter: JitterModel,
}

impl PipelineConfig {
    /// Checks the parameter invariants and that `buffer_rows` covers the
    /// mapping's phase-corrected buffer requirement.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.camera.role() != ScanRole::Camera || self.display.role() != ScanRole::Display {
            return Err(PipelineError::Config("camera/display scan roles are swapped".into()));
        }
        if self.render_lead < Nanos::ZERO {
            return Err(PipelineError::Config("render lead must be non-negative".into()));
        }
        if self.slice_budget <= Nanos::ZERO {
            return Err(PipelineError::Config("slice budget must be positive".into()));
        }
        if self.camera.frame_period() != self.display.frame_period() {
            return Err(PipelineError::Config(format!(
                "camera frame period {} ms differs from display frame period {} ms",
                self.camera.frame_period(),
                self.display.frame_period()
            )));
        }
        self.jitter.validate()?;
        let required = self.required_buffer_rows()?;
        if self.buffer_rows < required {
            return Err(PipelineError::InsufficientBuffer {
                configured: self.buffer_rows,
                required,
            });
        }
        Ok(())
    }

    /// Camera rows the mapping needs buffered once the phase offset is
    /// applied.
    pub fn required_buffer_rows(&self) -> Result<u64, PipelineError> {
        let field = optics::buffer_latency_field(&self.mapping, &self.camera, &self.display)?;
        let corrected = field.shifted(optics::select_phase_offset(&field));
        Ok(optics::required_buffer(&corrected, &self.camera)?)
    }

    pub fn rows_per_slice(&self) -> u32 {
        let n = self.display.rows_in_budget(self.slice_budget).max(1);
        n.min(u64::from(self.display.rows())) as u32
    }

    /// Display-row ranges of the compositor slices, top to bottom.
    pub fn slices(&self) -> Vec<Range<u32>> {
        match self.mode {
            #[allow(clippy::single_range_in_vec_init)]
            PipelineMode::FullFrame => vec![0..self.display.rows()],
            PipelineMode::Sliced => {
                let n = self.rows_per_slice();
                (0..self.display.rows())
                    .step_by(n as usize)
                    .map(|a| a..(a + n).min(self.display.rows()))
                    .collect()
            }
        }
    }

    /// Camera phase at which every slice's sampled camera rows are ready
    /// exactly by its dispatch deadline (sliced mode), or at which a full
    /// camera frame plus a base dispatch completes at the next display vsync
    /// minus the render lead (full-frame mode).
    pub fn aligned_camera_phase(&self) -> Nanos {
        let camera = self.camera.with_phase(Nanos::ZERO);
        let advance = match self.mode {
            PipelineMode::Sliced => {
                let mut advance = Nanos(i64::MIN);
                for slice in self.slices() {
                    let deadline = self.display.row_start(slice.start, 0) - self.render_lead;
                    let latest = self.latest_source_ready(&camera, slice);
                    if let Some(latest) = latest {
                        advance = advance.max(latest - deadline);
                    }
                }
                if advance == Nanos(i64::MIN) {
                    Nanos::ZERO
                } else {
                    advance
                }
            }
            PipelineMode::FullFrame => {
                let complete = camera.row_times_unchecked(camera.rows() - 1, 0).ready;
                let vsync = self.display.row_start(0, 1);
                complete + self.jitter.base_dispatch - (vsync - self.render_lead)
            }
        };
        -advance
    }

    /// Returns a copy whose camera phase is [`aligned_camera_phase`](Self::aligned_camera_phase).
    pub fn with_aligned_camera(&self) -> Self {
        let mut cfg = self.clone();
        cfg.camera = self.camera.with_phase(self.aligned_camera_phase());
        cfg
    }

    fn latest_source_ready(&self, camera: &ScanSpec, slice: Range<u32>) -> Option<Nanos> {
        let m = &self.mapping;
        let mut latest: Option<u32> = None;
        for j in m.grid_rows_in(slice) {
            for i in 0..m.grid_dims().0 {
                if let Some(k) = m.last_source_row(m.index(i, j)) {
                    latest = Some(latest.map_or(k, |l| l.max(k)));
                }
            }
        }
        latest.map(|k| camera.row_times_unchecked(k, 0).ready)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_validation() {
        assert!(JitterModel::none(Nanos(20_000)).validate().is_ok());
        assert!(JitterModel::spike(Nanos(2), Nanos(1), 0.5).validate().is_err());
        assert!(JitterModel::spike(Nanos(1), Nanos(2), 1.5).validate().is_err());
        assert!(JitterModel::uniform(Nanos(-1), Nanos(2)).validate().is_err());
    }

    #[test]
    fn sampler_respects_model() {
        let mut s = JitterSampler::new(JitterModel::spike(Nanos(10), Nanos(1_500_000), 1.0), 3);
        assert!((0..100).all(|_| s.sample() == Nanos(1_500_000)));
        let mut s = JitterSampler::new(JitterModel::spike(Nanos(10), Nanos(1_500_000), 0.0), 3);
        assert!((0..100).all(|_| s.sample() == Nanos(10)));
        let mut s = JitterSampler::new(JitterModel::uniform(Nanos(10), Nanos(20)), 3);
        assert!((0..1000).map(|_| s.sample()).all(|d| d >= Nanos(10) && d <= Nanos(20)));
    }

    #[test]
    fn sampler_is_deterministic() {
        let model = JitterModel::uniform(Nanos(0), Nanos(1_000_000));
        let a: Vec<_> = {
            let mut s = JitterSampler::new(model, 42);
            (0..50).map(|_| s.sample()).collect()
        };
        let b: Vec<_> = {
            let mut s = JitterSampler::new(model, 42);
            (0..50).map(|_| s.sample()).collect()
        };
        assert_eq!(a, b);
    }
}
