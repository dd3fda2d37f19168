use super::{Dims, OpticsError, PixelMapping};
use crate::scanout::{ScanRole, ScanSpec};
use crate::time::Nanos;

/// Per-pixel signed durations with statistics over the valid pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyField {
    dims: Dims,
    values: Vec<Nanos>,
    valid: Vec<bool>,
    stat_min: Nanos,
    stat_max: Nanos,
    stat_mean: Nanos,
}

impl LatencyField {
    pub fn new(dims: Dims, values: Vec<Nanos>, valid: Vec<bool>) -> Result<Self, OpticsError> {
        let n = dims.0 as usize * dims.1 as usize;
        if values.len() != n || valid.len() != n {
            return Err(OpticsError::DimensionMismatch(format!(
                "field {}x{} needs {n} values, got {} values and {} flags",
                dims.0,
                dims.1,
                values.len(),
                valid.len()
            )));
        }
        let mut min = Nanos(i64::MAX);
        let mut max = Nanos(i64::MIN);
        let mut sum: i128 = 0;
        let mut count: i128 = 0;
        for (v, _) in values.iter().zip(&valid).filter(|(_, ok)| **ok) {
            min = min.min(*v);
            max = max.max(*v);
            sum += i128::from(v.get());
            count += 1;
        }
        if count == 0 {
            return Err(OpticsError::EmptyField);
        }
        let mean = Nanos(sum.div_euclid(count) as i64);
        Ok(Self { dims, values, valid, stat_min: min, stat_max: max, stat_mean: mean })
    }

    /// A field where every pixel is valid.
    pub fn from_values(dims: Dims, values: Vec<Nanos>) -> Result<Self, OpticsError> {
        let valid = vec![true; values.len()];
        Self::new(dims, values, valid)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[Nanos] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn value(&self, column: u32, row: u32) -> Option<Nanos> {
        let idx = row as usize * self.dims.0 as usize + column as usize;
        self.valid.get(idx).copied().unwrap_or(false).then(|| self.values[idx])
    }

    pub fn valid_values(&self) -> impl Iterator<Item = Nanos> + '_ {
        self.values.iter().zip(&self.valid).filter(|(_, ok)| **ok).map(|(v, _)| *v)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn stat_min(&self) -> Nanos {
        self.stat_min
    }

    pub fn stat_max(&self) -> Nanos {
        self.stat_max
    }

    pub fn stat_mean(&self) -> Nanos {
        self.stat_mean
    }

    /// Every value plus `offset`.
    pub fn shifted(&self, offset: Nanos) -> Self {
        let values = self.values.iter().map(|v| *v + offset).collect();
        Self {
            dims: self.dims,
            values,
            valid: self.valid.clone(),
            stat_min: self.stat_min + offset,
            stat_max: self.stat_max + offset,
            stat_mean: self.stat_mean + offset,
        }
    }
}

/// Slack between a display row's emission start and the readiness of the
/// last camera row its pixels sample, per display pixel, for frame 0 of both
/// scans. Negative values mean the camera row arrives too late.
pub fn buffer_latency_field(
    mapping: &PixelMapping,
    camera: &ScanSpec,
    display: &ScanSpec,
) -> Result<LatencyField, OpticsError> {
    if camera.role() != ScanRole::Camera || display.role() != ScanRole::Display {
        return Err(OpticsError::DimensionMismatch(
            "expected a camera spec and a display spec".into(),
        ));
    }
    if mapping.display_dims().1 != display.rows() {
        return Err(OpticsError::DimensionMismatch(format!(
            "mapping has {} display rows, display scans {}",
            mapping.display_dims().1,
            display.rows()
        )));
    }
    if mapping.camera_dims().1 != camera.rows() {
        return Err(OpticsError::DimensionMismatch(format!(
            "mapping has {} camera rows, camera scans {}",
            mapping.camera_dims().1,
            camera.rows()
        )));
    }
    let (gw, gh) = mapping.grid_dims();
    let mut values = Vec::with_capacity(mapping.len());
    for j in 0..gh {
        let emit_start = display.row_start(mapping.display_row(j), 0);
        for i in 0..gw {
            let idx = mapping.index(i, j);
            let v = match mapping.last_source_row(idx) {
                Some(k) => emit_start - camera.row_times_unchecked(k, 0).ready,
                None => Nanos::ZERO,
            };
            values.push(v);
        }
    }
    LatencyField::new((gw, gh), values, mapping.valid_mask().to_vec())
}

/// Camera advance that lifts the field minimum to exactly zero.
pub fn select_phase_offset(field: &LatencyField) -> Nanos {
    -field.stat_min()
}

/// Camera rows that must be retained ahead of compositing for a
/// phase-corrected field: `ceil(stat_max / row_period)`.
pub fn required_buffer(field: &LatencyField, camera: &ScanSpec) -> Result<u64, OpticsError> {
    if field.stat_min() < Nanos::ZERO {
        return Err(OpticsError::PhaseNotApplied(field.stat_min()));
    }
    Ok(camera.rows_covering(field.stat_max()))
}
