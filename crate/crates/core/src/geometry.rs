//! Top-down stereo geometry of a head turning in front of a flat screen, and
//! the screen-space and disparity errors caused by rendering from a stale
//! head pose.
//!
//! Coordinates are planar: `x` lateral (positive to the right), `z` forward,
//! origin at the head's center of rotation. Lengths are centimeters, public
//! angles degrees. Positive yaw turns the face toward `+x`.
//!
//! Rendering with latency is modeled as head-fixed composition: the image
//! computed for the pose at `yaw_rendered` travels with the head, so each
//! displayed ray keeps its head-relative direction and is re-anchored at the
//! eye's true position.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const ARCSEC_PER_RAD: f64 = 180.0 / std::f64::consts::PI * 3600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error("invalid head trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("ray is parallel to the screen plane")]
    ParallelRay,
    #[error("screen plane lies behind the ray origin")]
    ScreenBehindOrigin,
    #[error("visual-axis posing needs a fixation point")]
    MissingFixation,
    #[error("fixation point is behind the eye")]
    FixationBehindEye,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.z - o.z)
    }

    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.z + o.z)
    }

    fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.z * s)
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.z)
    }

    /// Rotation by `a` radians in the yaw sense: `(0, 1)` turns toward `+x`.
    pub fn rotated(self, a: f64) -> Point {
        let (s, c) = a.sin_cos();
        Point::new(self.x * c + self.z * s, -self.x * s + self.z * c)
    }

    /// Direction angle from the `+z` axis toward `+x`, radians.
    pub fn heading(self) -> f64 {
        self.x.atan2(self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayOrigin {
    /// Rays start at the eyes' centers of rotation.
    EyeCor,
    /// Rays start at the entrance pupils of eyes fixating the object.
    VisualAxis,
}

impl RayOrigin {
    pub fn label(self) -> &'static str {
        match self {
            RayOrigin::EyeCor => "eye_cor",
            RayOrigin::VisualAxis => "visual_axis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigGeometry {
    pub ipd_cm: f64,
    pub eye_front_from_head_cor_cm: f64,
    pub eye_cor_behind_front_cm: f64,
    pub pupil_ahead_of_eye_cor_cm: f64,
    pub screen_from_eye_front_cm: f64,
    pub object_from_eye_front_cm: f64,
    /// Angle between the visual and pupillary axes; the pupillary axis is
    /// rotated temporally.
    pub kappa_deg: f64,
    pub mode: RayOrigin,
}

impl Default for RigGeometry {
    fn default() -> Self {
        Self {
            ipd_cm: 6.0,
            eye_front_from_head_cor_cm: 9.12,
            eye_cor_behind_front_cm: 1.2,
            pupil_ahead_of_eye_cor_cm: 1.0,
            screen_from_eye_front_cm: 57.0,
            object_from_eye_front_cm: 20.0,
            kappa_deg: 5.0,
            mode: RayOrigin::EyeCor,
        }
    }
}

impl RigGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let lengths = [
            ("ipd", self.ipd_cm),
            ("eye front distance", self.eye_front_from_head_cor_cm),
            ("eye CoR depth", self.eye_cor_behind_front_cm),
            ("pupil offset", self.pupil_ahead_of_eye_cor_cm),
            ("screen distance", self.screen_from_eye_front_cm),
            ("object distance", self.object_from_eye_front_cm),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::InvalidRig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=15.0).contains(&self.kappa_deg) {
            return Err(GeometryError::InvalidRig(format!(
                "kappa must lie in [0, 15] degrees, got {}",
                self.kappa_deg
            )));
        }
        if self.eye_cor_behind_front_cm >= self.eye_front_from_head_cor_cm {
            return Err(GeometryError::InvalidRig("eye CoR must lie in front of the head CoR".into()));
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: RayOrigin) -> Self {
        Self { mode, ..*self }
    }

    pub fn eye_cor_z(&self) -> f64 {
        self.eye_front_from_head_cor_cm - self.eye_cor_behind_front_cm
    }

    pub fn screen_z(&self) -> f64 {
        self.eye_front_from_head_cor_cm + self.screen_from_eye_front_cm
    }

    /// The midline scene point, fixed in the world.
    pub fn object(&self) -> Point {
        Point::new(0.0, self.eye_front_from_head_cor_cm + self.object_from_eye_front_cm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Static,
    Sweep,
    Sinusoid,
}

/// Head yaw over time.
///
/// `Static` holds `yaw_range.0`. `Sweep` holds `yaw_range.0` until `t = 0`,
/// turns at `sweep_velocity_deg_s` to `yaw_range.1`, then holds.
/// `Sinusoid` is `amplitude * sin(2 pi frequency t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadTrajectory {
    pub kind: TrajectoryKind,
    pub yaw_range_deg: (f64, f64),
    pub amplitude_deg: f64,
    pub frequency_hz: f64,
    pub sweep_velocity_deg_s: f64,
    /// Length of the sampled window in seconds; 0 picks the natural span
    /// (the sweep plus the lag, or one sinusoid period).
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

impl Default for HeadTrajectory {
    fn default() -> Self {
        Self {
            kind: TrajectoryKind::Sweep,
            yaw_range_deg: (-25.0, 25.0),
            amplitude_deg: 15.628,
            frequency_hz: 0.5,
            sweep_velocity_deg_s: 7.2,
            duration_s: 0.0,
            sample_rate_hz: 1000.0,
        }
    }
}

impl HeadTrajectory {
    pub fn sinusoid(amplitude_deg: f64, frequency_hz: f64) -> Self {
        Self { kind: TrajectoryKind::Sinusoid, amplitude_deg, frequency_hz, ..Self::default() }
    }

    pub fn sweep(from_deg: f64, to_deg: f64, velocity_deg_s: f64) -> Self {
        Self {
            kind: TrajectoryKind::Sweep,
            yaw_range_deg: (from_deg, to_deg),
            sweep_velocity_deg_s: velocity_deg_s,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidTrajectory(m));
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!("sample rate must be positive, got {}", self.sample_rate_hz));
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return bad(format!("duration must be non-negative, got {}", self.duration_s));
        }
        match self.kind {
            TrajectoryKind::Static => {}
            TrajectoryKind::Sweep => {
                if !(self.sweep_velocity_deg_s.is_finite() && self.sweep_velocity_deg_s > 0.0) {
                    return bad(format!(
                        "sweep velocity must be positive, got {}",
                        self.sweep_velocity_deg_s
                    ));
                }
                if !(self.yaw_range_deg.0 < self.yaw_range_deg.1) {
                    return bad("sweep yaw range must be increasing".into());
                }
            }
            TrajectoryKind::Sinusoid => {
                if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
                    return bad(format!("frequency must be positive, got {}", self.frequency_hz));
                }
                if !self.amplitude_deg.is_finite() {
                    return bad("amplitude must be finite".into());
                }
            }
        }
        Ok(())
    }

    fn sweep_time(&self) -> f64 {
        (self.yaw_range_deg.1 - self.yaw_range_deg.0) / self.sweep_velocity_deg_s
    }

    /// Yaw in degrees at time `t` seconds.
    pub fn yaw_deg(&self, t: f64) -> f64 {
        match self.kind {
            TrajectoryKind::Static => self.yaw_range_deg.0,
            TrajectoryKind::Sweep => {
                let t = t.clamp(0.0, self.sweep_time());
                self.yaw_range_deg.0 + self.sweep_velocity_deg_s * t
            }
            TrajectoryKind::Sinusoid => {
                self.amplitude_deg * (2.0 * std::f64::consts::PI * self.frequency_hz * t).sin()
            }
        }
    }

    /// Sample instants covering the trajectory with `lag` seconds of
    /// trailing time; motion breakpoints are always included.
    pub fn sample_times(&self, lag: f64) -> Vec<f64> {
        let span = if self.duration_s > 0.0 {
            self.duration_s
        } else {
            match self.kind {
                TrajectoryKind::Static => lag,
                TrajectoryKind::Sweep => self.sweep_time() + lag,
                TrajectoryKind::Sinusoid => 1.0 / self.frequency_hz,
            }
        };
        let n = (span * self.sample_rate_hz).floor() as u64;
        let mut ts: Vec<f64> = (0..=n).map(|i| i as f64 / self.sample_rate_hz).collect();
        let mut extra = vec![span];
        if self.kind == TrajectoryKind::Sweep {
            extra.extend([self.sweep_time(), self.sweep_time() + lag]);
        }
        ts.extend(extra.into_iter().filter(|&t| t <= span));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Ray origin of one eye and, in visual-axis mode, its gaze direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePose {
    pub origin: Point,
    pub visual_axis: Option<Point>,
}

/// Left and right ray origins for the head at `yaw_deg`.
///
/// In visual-axis mode each eye turns about its center of rotation to look
/// at `fixation`, and the origin is the pupil, offset from the center along
/// the pupillary axis (the visual axis turned temporally by kappa).
pub fn pose_eyes(
    rig: &RigGeometry,
    yaw_deg: f64,
    fixation: Option<Point>,
) -> Result<[EyePose; 2], GeometryError> {
    rig.validate()?;
    let yaw = yaw_deg.to_radians();
    let mut out = [EyePose { origin: Point::default(), visual_axis: None }; 2];
    for (pose, side) in out.iter_mut().zip([-1.0, 1.0]) {
        let cor = Point::new(side * rig.ipd_cm / 2.0, rig.eye_cor_z()).rotated(yaw);
        *pose = match rig.mode {
            RayOrigin::EyeCor => EyePose { origin: cor, visual_axis: None },
            RayOrigin::VisualAxis => {
                let fix = fixation.ok_or(GeometryError::MissingFixation)?;
                let to_fix = fix.sub(cor);
                let facing = Point::new(0.0, 1.0).rotated(yaw);
                if to_fix.x * facing.x + to_fix.z * facing.z <= 0.0 {
                    return Err(GeometryError::FixationBehindEye);
                }
                let axis = to_fix.scale(1.0 / to_fix.norm());
                // temporal is -x for the left eye, +x for the right
                let pupillary = axis.rotated(side * rig.kappa_deg.to_radians());
                EyePose {
                    origin: cor.add(pupillary.scale(rig.pupil_ahead_of_eye_cor_cm)),
                    visual_axis: Some(axis),
                }
            }
        };
    }
    Ok(out)
}

/// Lateral coordinate where the ray from `origin` through `target` meets the
/// plane `z = screen_z`.
pub fn project_point(origin: Point, target: Point, screen_z: f64) -> Result<f64, GeometryError> {
    project_ray(origin, target.sub(origin), screen_z)
}

fn project_ray(origin: Point, dir: Point, screen_z: f64) -> Result<f64, GeometryError> {
    if dir.z == 0.0 {
        return Err(GeometryError::ParallelRay);
    }
    let s = (screen_z - origin.z) / dir.z;
    if s < 0.0 {
        return Err(GeometryError::ScreenBehindOrigin);
    }
    Ok(origin.x + s * dir.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StereoProjection {
    pub left: f64,
    pub right: f64,
    pub separation: f64,
}

/// Displayed rays per eye: origin at the true eye, direction rendered for
/// `yaw_rendered_deg` and carried along with the head.
fn displayed_rays(
    rig: &RigGeometry,
    yaw_true_deg: f64,
    yaw_rendered_deg: f64,
) -> Result<[(Point, Point); 2], GeometryError> {
    let object = rig.object();
    let rendered = pose_eyes(rig, yaw_rendered_deg, Some(object))?;
    let actual = pose_eyes(rig, yaw_true_deg, Some(object))?;
    let turn = (yaw_true_deg - yaw_rendered_deg).to_radians();
    let ray = |i: usize| (actual[i].origin, object.sub(rendered[i].origin).rotated(turn));
    Ok([ray(0), ray(1)])
}

/// Screen positions of the midline object rendered for `yaw_rendered_deg`
/// and viewed with the head at `yaw_true_deg`.
pub fn stereo_pair(
    rig: &RigGeometry,
    yaw_true_deg: f64,
    yaw_rendered_deg: f64,
) -> Result<StereoProjection, GeometryError> {
    let [l, r] = displayed_rays(rig, yaw_true_deg, yaw_rendered_deg)?;
    let left = project_ray(l.0, l.1, rig.screen_z())?;
    let right = project_ray(r.0, r.1, rig.screen_z())?;
    Ok(StereoProjection { left, right, separation: (left - right).abs() })
}

/// Projections over a list of head yaws without latency.
pub fn projection_sweep(
    rig: &RigGeometry,
    yaws_deg: &[f64],
) -> Result<Vec<(f64, StereoProjection)>, GeometryError> {
    yaws_deg.iter().map(|&y| stereo_pair(rig, y, y).map(|p| (y, p))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table19Metrics {
    /// Binocular separation on screen with the head facing forward.
    pub head_forward_cm: f64,
    /// Range of the left-eye screen position over the trajectory, no lag.
    pub range_zero_latency_cm: f64,
    /// Same range with the rendered pose lagging by the report latency.
    pub range_latency_cm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table19Report {
    pub latency_s: f64,
    pub eye_cor: Table19Metrics,
    pub visual_axis: Table19Metrics,
}

impl fmt::Display for Table19Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lag = format!("{}-ms latency", fmt_ms(self.latency_s * 1e3));
        writeln!(f, "{:<24}{:>12}{:>14}", "Metric", "Eye CoR", "Visual axis")?;
        let rows = [
            ("Head forward (0 deg)", self.eye_cor.head_forward_cm, self.visual_axis.head_forward_cm),
            ("0-ms latency", self.eye_cor.range_zero_latency_cm, self.visual_axis.range_zero_latency_cm),
            (lag.as_str(), self.eye_cor.range_latency_cm, self.visual_axis.range_latency_cm),
        ];
        for (name, a, b) in rows {
            writeln!(f, "{name:<24}{a:>12.2}{b:>14.2}")?;
        }
        Ok(())
    }
}

fn fmt_ms(ms: f64) -> String {
    let s = format!("{ms:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn left_range(
    rig: &RigGeometry,
    trajectory: &HeadTrajectory,
    latency_s: f64,
) -> Result<f64, GeometryError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in trajectory.sample_times(latency_s) {
        let x = stereo_pair(rig, trajectory.yaw_deg(t), trajectory.yaw_deg(t - latency_s))?.left;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Ok(hi - lo)
}

/// Forward separation and single-eye screen travel over a head sweep, with
/// and without latency, for both ray-origin conditions.
pub fn table19_report(
    rig: &RigGeometry,
    trajectory: &HeadTrajectory,
    latency_s: f64,
) -> Result<Table19Report, GeometryError> {
    rig.validate()?;
    trajectory.validate()?;
    if !(latency_s.is_finite() && latency_s >= 0.0) {
        return Err(GeometryError::InvalidTrajectory(format!("latency must be non-negative, got {latency_s}")));
    }
    let metrics = |mode: RayOrigin| -> Result<Table19Metrics, GeometryError> {
        let rig = rig.with_mode(mode);
        Ok(Table19Metrics {
            head_forward_cm: stereo_pair(&rig, 0.0, 0.0)?.separation,
            range_zero_latency_cm: left_range(&rig, trajectory, 0.0)?,
            range_latency_cm: left_range(&rig, trajectory, latency_s)?,
        })
    };
    Ok(Table19Report {
        latency_s,
        eye_cor: metrics(RayOrigin::EyeCor)?,
        visual_axis: metrics(RayOrigin::VisualAxis)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisparityTrace {
    /// `(t seconds, error arcsec)` over one period.
    pub samples: Vec<(f64, f64)>,
    /// Largest absolute error.
    pub peak_arcsec: f64,
    /// Largest minus smallest error.
    pub peak_to_peak_arcsec: f64,
}

/// Angular disparity (left minus right visual direction) of the displayed
/// object, radians.
fn disparity(rig: &RigGeometry, yaw_true_deg: f64, yaw_rendered_deg: f64) -> Result<f64, GeometryError> {
    let [l, r] = displayed_rays(rig, yaw_true_deg, yaw_rendered_deg)?;
    Ok(l.1.heading() - r.1.heading())
}

/// Binocular disparity error caused by rendering `latency_s` behind a
/// sinusoidal head motion, sampled over one period.
pub fn disparity_error_trace(
    rig: &RigGeometry,
    trajectory: &HeadTrajectory,
    latency_s: f64,
) -> Result<DisparityTrace, GeometryError> {
    rig.validate()?;
    trajectory.validate()?;
    if trajectory.kind != TrajectoryKind::Sinusoid {
        return Err(GeometryError::InvalidTrajectory("disparity traces need a sinusoid".into()));
    }
    if !(latency_s.is_finite() && latency_s >= 0.0) {
        return Err(GeometryError::InvalidTrajectory(format!("latency must be non-negative, got {latency_s}")));
    }
    let mut samples = Vec::new();
    for t in trajectory.sample_times(latency_s) {
        let yt = trajectory.yaw_deg(t);
        let yr = trajectory.yaw_deg(t - latency_s);
        let err = disparity(rig, yt, yr)? - disparity(rig, yt, yt)?;
        samples.push((t, err * ARCSEC_PER_RAD));
    }
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    let hi = samples.iter().fold(f64::NEG_INFINITY, |m, s| m.max(s.1));
    let lo = samples.iter().fold(f64::INFINITY, |m, s| m.min(s.1));
    Ok(DisparityTrace { samples, peak_arcsec: peak, peak_to_peak_arcsec: hi - lo })
}
