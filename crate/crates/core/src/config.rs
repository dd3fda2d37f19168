//! Sectioned TOML run configuration.
//!
//! A configuration is assembled from a base (a named preset or the built-in
//! defaults), an optional file merged over it section by section, and
//! `section.key=value` overrides applied last. Unknown sections and keys are
//! rejected at every stage. Durations are decimal milliseconds and are
//! converted to integer nanoseconds exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{HeadTrajectory, RayOrigin, RigGeometry, TrajectoryKind};
use crate::optics::{
    self, DistortionProfile, OpticalCenters, PixelMapping, ProfileKind,
};
use crate::pipeline::{JitterKind, JitterModel, PipelineConfig, PipelineMode};
use crate::presets;
use crate::psychometrics::FitOptions;
use crate::scanout::{ScanRole, ScanSpec};
use crate::time::Nanos;
use crate::Error;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}:{line}: {}{message}", key.as_ref().map(|k| format!("key `{k}`: ")).unwrap_or_default())]
    Syntax { origin: String, line: usize, key: Option<String>, message: String },
    #[error("unknown preset `{0}` (available: {avail})", avail = presets::NAMES.join(", "))]
    UnknownPreset(String),
    #[error("override `{0}` must look like section.key=value")]
    MalformedOverride(String),
    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },
    #[error("`{key}`: {message}")]
    Value { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phase {
    Millis(f64),
    Keyword(PhaseKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKeyword {
    /// Advance the camera so every slice's source rows are ready exactly at
    /// its sliced-mode dispatch deadline.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    pub rows: u32,
    pub columns: u32,
    pub frame_rate_hz: f64,
    pub exposure_ms: f64,
    pub active_scan_fraction: f64,
    pub readout_delay_ms: f64,
    pub phase_ms: Phase,
}

impl Default for CameraSection {
    fn default() -> Self {
        Self {
            rows: 3160,
            columns: 5120,
            frame_rate_hz: 72.0,
            exposure_ms: 1.0,
            active_scan_fraction: 1.0,
            readout_delay_ms: 0.0,
            phase_ms: Phase::Keyword(PhaseKeyword::Auto),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisplaySection {
    pub rows: u32,
    pub columns: u32,
    pub frame_rate_hz: f64,
    pub persistence_ms: f64,
    pub active_scan_fraction: f64,
    pub phase_ms: f64,
}

impl Default for DisplaySection {
    fn default() -> Self {
        Self {
            rows: 3000,
            columns: 2768,
            frame_rate_hz: 72.0,
            persistence_ms: 1.0,
            active_scan_fraction: 1.0,
            phase_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Identity,
    RadialPolynomial,
    EquidistantFisheye,
    SampledLut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsSection {
    pub kind: ProfileName,
    /// Image scale near the axis, pixels per degree.
    pub focal_px_per_deg: f64,
    pub max_field_deg: f64,
    /// Radial polynomial coefficients, first-order term first.
    pub coefficients: Vec<f64>,
    /// `[field_deg, normalized_radius]` samples for a sampled profile.
    pub lut: Vec<[f64; 2]>,
}

impl OpticsSection {
    fn camera_default() -> Self {
        Self {
            kind: ProfileName::EquidistantFisheye,
            focal_px_per_deg: 31.6,
            max_field_deg: 90.0,
            coefficients: Vec::new(),
            lut: Vec::new(),
        }
    }

    fn display_default() -> Self {
        Self {
            kind: ProfileName::RadialPolynomial,
            focal_px_per_deg: 30.0,
            max_field_deg: 55.0,
            coefficients: vec![1.0, 0.0, 0.025],
            lut: Vec::new(),
        }
    }
}

impl Default for OpticsSection {
    fn default() -> Self {
        Self::display_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingSection {
    pub stride: u32,
    /// Optical centers in pixel-index coordinates; empty means the image
    /// center.
    pub display_center: Vec<f64>,
    pub camera_center: Vec<f64>,
}

impl Default for MappingSection {
    fn default() -> Self {
        Self { stride: 8, display_center: Vec::new(), camera_center: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub mode: PipelineMode,
    pub render_lead_ms: f64,
    pub slice_budget_ms: f64,
    pub buffer_rows: u64,
    pub frames: u32,
    pub seed: u64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            mode: PipelineMode::Sliced,
            render_lead_ms: 0.2,
            slice_budget_ms: 0.1,
            buffer_rows: 92,
            frames: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitterSection {
    pub kind: JitterKind,
    pub base_dispatch_ms: f64,
    pub worst_case_ms: f64,
    pub spike_probability: f64,
    pub seed: u64,
}

impl Default for JitterSection {
    fn default() -> Self {
        Self {
            kind: JitterKind::None,
            base_dispatch_ms: 0.02,
            worst_case_ms: 0.02,
            spike_probability: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigSection {
    pub ipd_cm: f64,
    pub eye_front_from_head_cor_cm: f64,
    pub eye_cor_behind_front_cm: f64,
    pub pupil_ahead_of_eye_cor_cm: f64,
    pub screen_from_eye_front_cm: f64,
    pub object_from_eye_front_cm: f64,
    pub kappa_deg: f64,
    pub mode: RayOrigin,
}

impl Default for RigSection {
    fn default() -> Self {
        let r = RigGeometry::default();
        Self {
            ipd_cm: r.ipd_cm,
            eye_front_from_head_cor_cm: r.eye_front_from_head_cor_cm,
            eye_cor_behind_front_cm: r.eye_cor_behind_front_cm,
            pupil_ahead_of_eye_cor_cm: r.pupil_ahead_of_eye_cor_cm,
            screen_from_eye_front_cm: r.screen_from_eye_front_cm,
            object_from_eye_front_cm: r.object_from_eye_front_cm,
            kappa_deg: r.kappa_deg,
            mode: r.mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub kind: TrajectoryKind,
    pub yaw_from_deg: f64,
    pub yaw_to_deg: f64,
    pub sweep_velocity_deg_s: f64,
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        let t = HeadTrajectory::default();
        Self {
            kind: t.kind,
            yaw_from_deg: t.yaw_range_deg.0,
            yaw_to_deg: t.yaw_range_deg.1,
            sweep_velocity_deg_s: t.sweep_velocity_deg_s,
            amplitude_deg: t.amplitude_deg,
            frequency_hz: t.frequency_hz,
            duration_s: t.duration_s,
            sample_rate_hz: t.sample_rate_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table19Section {
    pub latency_ms: f64,
}

impl Default for Table19Section {
    fn default() -> Self {
        Self { latency_ms: 200.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisparitySection {
    pub ipd_cm: f64,
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
    pub latency_ms: f64,
    pub sample_rate_hz: f64,
}

impl Default for DisparitySection {
    fn default() -> Self {
        Self {
            ipd_cm: 6.1397,
            amplitude_deg: 15.628,
            frequency_hz: 0.5,
            latency_ms: 1.0,
            sample_rate_hz: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsychometricsSection {
    pub guess_rate: f64,
    pub lapse_rate: f64,
    pub criterion: f64,
}

impl Default for PsychometricsSection {
    fn default() -> Self {
        let o = FitOptions::default();
        Self { guess_rate: o.guess_rate, lapse_rate: o.lapse_rate, criterion: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolSection {
    pub count: usize,
    pub lo_ms: f64,
    pub hi_ms: f64,
}

impl Default for SobolSection {
    fn default() -> Self {
        Self { count: 50, lo_ms: 0.0, hi_ms: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub camera: CameraSection,
    pub display: DisplaySection,
    pub camera_optics: OpticsSection,
    pub display_optics: OpticsSection,
    pub mapping: MappingSection,
    pub pipeline: PipelineSection,
    pub jitter: JitterSection,
    pub rig: RigSection,
    pub trajectory: TrajectorySection,
    pub table19: Table19Section,
    pub disparity: DisparitySection,
    pub psychometrics: PsychometricsSection,
    pub sobol: SobolSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            camera: CameraSection::default(),
            display: DisplaySection::default(),
            camera_optics: OpticsSection::camera_default(),
            display_optics: OpticsSection::display_default(),
            mapping: MappingSection::default(),
            pipeline: PipelineSection::default(),
            jitter: JitterSection::default(),
            rig: RigSection::default(),
            trajectory: TrajectorySection::default(),
            table19: Table19Section::default(),
            disparity: DisparitySection::default(),
            psychometrics: PsychometricsSection::default(),
            sobol: SobolSection::default(),
        }
    }
}

fn syntax_error(origin: &str, text: &str, err: &toml::de::Error) -> ConfigError {
    let (line, key) = match err.span() {
        Some(span) => {
            let start = span.start.min(text.len());
            let line = text[..start].matches('\n').count() + 1;
            let line_text = text.lines().nth(line - 1).unwrap_or("");
            let key = line_text
                .split_once('=')
                .map(|(k, _)| k.trim().to_string())
                .filter(|k| !k.is_empty() && !k.starts_with('['));
            (line, key)
        }
        None => (0, None),
    };
    ConfigError::Syntax {
        origin: origin.to_string(),
        line,
        key,
        message: err.message().trim().replace('\n', " "),
    }
}

/// Parses one config document, reporting the first problem with its line
/// and key.
fn parse_table(origin: &str, text: &str) -> Result<toml::Table, ConfigError> {
    toml::from_str::<Config>(text).map_err(|e| syntax_error(origin, text, &e))?;
    toml::from_str::<toml::Table>(text).map_err(|e| syntax_error(origin, text, &e))
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl Config {
    /// Built-in preset by name.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::load(Some(name), None, &[])
    }

    /// Parses a complete document over the built-in defaults.
    pub fn from_toml(origin: &str, text: &str) -> Result<Self, ConfigError> {
        Self::load(None, Some((origin, text)), &[])
    }

    /// Base preset (or defaults), then `file`, then `overrides`
    /// (`section.key=value`, value in TOML syntax; bare words are strings).
    pub fn load(
        preset: Option<&str>,
        file: Option<(&str, &str)>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        // Layering over the full default table keeps every key present, so a
        // partial section never falls back to another section's defaults.
        let defaults = toml::Table::try_from(Config::default()).expect("defaults serialize");
        let mut table = defaults.clone();
        if let Some(name) = preset {
            let text = presets::get(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
            merge(&mut table, parse_table(&format!("preset {name}"), text)?);
        }
        if let Some((origin, text)) = file {
            merge(&mut table, parse_table(origin, text)?);
        }
        for ov in overrides {
            let (path, raw) = ov.split_once('=').ok_or_else(|| ConfigError::MalformedOverride(ov.clone()))?;
            let path = path.trim();
            let (section, key) =
                path.split_once('.').ok_or_else(|| ConfigError::MalformedOverride(ov.clone()))?;
            let known = defaults
                .get(section)
                .and_then(|s| s.as_table())
                .is_some_and(|s| s.contains_key(key));
            if !known {
                return Err(ConfigError::Override {
                    key: path.to_string(),
                    message: "no such configuration key".into(),
                });
            }
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let Some(sec) = entry.as_table_mut() else {
                return Err(ConfigError::Override { key: path.to_string(), message: "not a section".into() });
            };
            sec.insert(key.to_string(), parse_override_value(raw.trim()));
            Config::deserialize(toml::Value::Table(table.clone())).map_err(|e| ConfigError::Override {
                key: path.to_string(),
                message: e.message().trim().replace('\n', " "),
            })?;
        }
        Config::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Value {
            key: "config".into(),
            message: e.message().trim().replace('\n', " "),
        })
    }

    /// Serialized form, suitable as a starting file.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn ms(key: &str, v: f64) -> Result<Nanos, Error> {
    Nanos::from_ms_f64(v).map_err(|e| {
        Error::Config(ConfigError::Value { key: key.to_string(), message: e.to_string() })
    })
}

fn frame_period(key: &str, rate_hz: f64) -> Result<Nanos, Error> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::Config(ConfigError::Value {
            key: key.to_string(),
            message: format!("frame rate must be positive, got {rate_hz}"),
        }));
    }
    Ok(Nanos((1e9 / rate_hz).round() as i64))
}

fn profile(section: &OpticsSection) -> Result<DistortionProfile, Error> {
    let kind = match section.kind {
        ProfileName::Identity => ProfileKind::Identity,
        ProfileName::EquidistantFisheye => ProfileKind::EquidistantFisheye,
        ProfileName::RadialPolynomial => {
            ProfileKind::RadialPolynomial { coefficients: section.coefficients.clone() }
        }
        ProfileName::SampledLut => ProfileKind::SampledLut {
            samples: section.lut.iter().map(|s| (s[0].to_radians(), s[1])).collect(),
        },
    };
    let focal = section.focal_px_per_deg.to_degrees();
    Ok(DistortionProfile::new(kind, focal, section.max_field_deg.to_radians())?)
}

fn center(key: &str, v: &[f64], default: (f64, f64)) -> Result<(f64, f64), Error> {
    match v {
        [] => Ok(default),
        [x, y] => Ok((*x, *y)),
        _ => Err(Error::Config(ConfigError::Value {
            key: key.to_string(),
            message: "expected [x, y]".into(),
        })),
    }
}

impl Config {
    /// Camera scan with the configured phase; `auto` is resolved by
    /// [`pipeline`](Self::pipeline).
    pub fn camera_spec(&self) -> Result<ScanSpec, Error> {
        let c = &self.camera;
        let phase = match c.phase_ms {
            Phase::Millis(v) => ms("camera.phase_ms", v)?,
            Phase::Keyword(PhaseKeyword::Auto) => Nanos::ZERO,
        };
        Ok(ScanSpec::with_params(
            ScanRole::Camera,
            c.rows,
            frame_period("camera.frame_rate_hz", c.frame_rate_hz)?,
            c.active_scan_fraction,
            ms("camera.exposure_ms", c.exposure_ms)?,
            phase,
            ms("camera.readout_delay_ms", c.readout_delay_ms)?,
        )?)
    }

    pub fn display_spec(&self) -> Result<ScanSpec, Error> {
        let d = &self.display;
        Ok(ScanSpec::with_params(
            ScanRole::Display,
            d.rows,
            frame_period("display.frame_rate_hz", d.frame_rate_hz)?,
            d.active_scan_fraction,
            ms("display.persistence_ms", d.persistence_ms)?,
            ms("display.phase_ms", d.phase_ms)?,
            Nanos::ZERO,
        )?)
    }

    pub fn profiles(&self) -> Result<(DistortionProfile, DistortionProfile), Error> {
        Ok((profile(&self.camera_optics)?, profile(&self.display_optics)?))
    }

    pub fn display_dims(&self) -> optics::Dims {
        (self.display.columns, self.display.rows)
    }

    pub fn camera_dims(&self) -> optics::Dims {
        (self.camera.columns, self.camera.rows)
    }

    pub fn centers(&self) -> Result<OpticalCenters, Error> {
        let c = OpticalCenters::centered(self.display_dims(), self.camera_dims());
        Ok(OpticalCenters {
            display: center("mapping.display_center", &self.mapping.display_center, c.display)?,
            camera: center("mapping.camera_center", &self.mapping.camera_center, c.camera)?,
        })
    }

    pub fn mapping(&self) -> Result<PixelMapping, Error> {
        let (cam, disp) = self.profiles()?;
        Ok(optics::build_mapping(
            &cam,
            &disp,
            self.display_dims(),
            self.camera_dims(),
            self.centers()?,
            self.mapping.stride,
        )?)
    }

    pub fn jitter(&self) -> Result<JitterModel, Error> {
        let j = &self.jitter;
        Ok(JitterModel {
            kind: j.kind,
            base_dispatch: ms("jitter.base_dispatch_ms", j.base_dispatch_ms)?,
            worst_case: ms("jitter.worst_case_ms", j.worst_case_ms)?,
            spike_probability: j.spike_probability,
            seed: j.seed,
        })
    }

    /// Pipeline over `mapping`. An `auto` camera phase is aligned to the
    /// sliced compositor's deadlines for this render lead, whatever the mode.
    pub fn pipeline(&self, mapping: Arc<PixelMapping>) -> Result<PipelineConfig, Error> {
        let p = &self.pipeline;
        let mut cfg = PipelineConfig {
            camera: self.camera_spec()?,
            display: self.display_spec()?,
            mapping,
            render_lead: ms("pipeline.render_lead_ms", p.render_lead_ms)?,
            slice_budget: ms("pipeline.slice_budget_ms", p.slice_budget_ms)?,
            buffer_rows: p.buffer_rows,
            mode: PipelineMode::Sliced,
            jitter: self.jitter()?,
        };
        if self.camera.phase_ms == Phase::Keyword(PhaseKeyword::Auto) {
            cfg = cfg.with_aligned_camera();
        }
        cfg.mode = p.mode;
        Ok(cfg)
    }

    pub fn rig(&self) -> RigGeometry {
        let r = &self.rig;
        RigGeometry {
            ipd_cm: r.ipd_cm,
            eye_front_from_head_cor_cm: r.eye_front_from_head_cor_cm,
            eye_cor_behind_front_cm: r.eye_cor_behind_front_cm,
            pupil_ahead_of_eye_cor_cm: r.pupil_ahead_of_eye_cor_cm,
            screen_from_eye_front_cm: r.screen_from_eye_front_cm,
            object_from_eye_front_cm: r.object_from_eye_front_cm,
            kappa_deg: r.kappa_deg,
            mode: r.mode,
        }
    }

    pub fn trajectory(&self) -> HeadTrajectory {
        let t = &self.trajectory;
        HeadTrajectory {
            kind: t.kind,
            yaw_range_deg: (t.yaw_from_deg, t.yaw_to_deg),
            amplitude_deg: t.amplitude_deg,
            frequency_hz: t.frequency_hz,
            sweep_velocity_deg_s: t.sweep_velocity_deg_s,
            duration_s: t.duration_s,
            sample_rate_hz: t.sample_rate_hz,
        }
    }

    /// Rig and sinusoid for the disparity-error trace.
    pub fn disparity_setup(&self) -> (RigGeometry, HeadTrajectory, f64) {
        let d = &self.disparity;
        let rig = RigGeometry { ipd_cm: d.ipd_cm, ..self.rig() };
        let traj = HeadTrajectory {
            sample_rate_hz: d.sample_rate_hz,
            ..HeadTrajectory::sinusoid(d.amplitude_deg, d.frequency_hz)
        };
        (rig, traj, d.latency_ms / 1e3)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            guess_rate: self.psychometrics.guess_rate,
            lapse_rate: self.psychometrics.lapse_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in presets::NAMES {
            Config::preset(name).unwrap();
        }
        assert!(matches!(Config::preset("nope"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn durations_are_exact() {
        let c = Config::preset("camsicle72").unwrap();
        let d = c.display_spec().unwrap();
        assert_eq!(d.frame_period(), Nanos(13_888_889));
        assert_eq!(d.integration(), Nanos(1_000_000));
        let p = c.pipeline(Arc::new(PixelMapping::identity((4, 4)))).err();
        assert!(p.is_none() || matches!(p, Some(Error::Optics(_))));
    }

    #[test]
    fn syntax_errors_name_line_and_key() {
        let text = "[camera]\nrows = 3160\nexposure_ms = \"long\"\n";
        let err = Config::from_toml("a.toml", text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("a.toml:3: key `exposure_ms`"), "{msg}");

        let text = "[display]\npersistence = 1.0\n";
        let msg = Config::from_toml("b.toml", text).unwrap_err().to_string();
        assert!(msg.contains("b.toml:2") && msg.contains("persistence"), "{msg}");

        let msg = Config::from_toml("c.toml", "[camera\nrows = 1\n").unwrap_err().to_string();
        assert!(msg.starts_with("c.toml:1"), "{msg}");
    }

    #[test]
    fn overrides_apply_and_validate() {
        let c = Config::load(Some("camsicle72"), None, &["pipeline.render_lead_ms=0.5".into()]).unwrap();
        assert_eq!(c.pipeline.render_lead_ms, 0.5);
        let c = Config::load(Some("camsicle72"), None, &["pipeline.mode=full_frame".into()]).unwrap();
        assert_eq!(c.pipeline.mode, PipelineMode::FullFrame);
        let c = Config::load(Some("camsicle72"), None, &["camera.phase_ms=-0.25".into()]).unwrap();
        assert_eq!(c.camera.phase_ms, Phase::Millis(-0.25));
        for bad in ["pipeline.bogus=1", "nosection.key=1", "pipeline.frames=many", "frames=3"] {
            assert!(Config::load(Some("camsicle72"), None, &[bad.into()]).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_merges_over_preset() {
        let c = Config::load(Some("camsicle72"), Some(("f.toml", "[pipeline]\nframes = 3\n")), &[]).unwrap();
        assert_eq!(c.pipeline.frames, 3);
        assert_eq!(c.pipeline.buffer_rows, 92);
    }

    #[test]
    fn default_round_trips() {
        let c = Config::preset("testbed").unwrap();
        assert_eq!(Config::from_toml("x", &c.to_toml()).unwrap(), c);
    }
}
