use serde::{Deserialize, Serialize};

use super::OpticsError;

/// Shape of a radially symmetric lens profile: field angle (radians) to
/// normalized image radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// Rectilinear pinhole, `tan(theta)`.
    Identity,
    /// `c1*theta + c2*theta^2 + ...`; `coefficients[0]` is `c1`.
    RadialPolynomial { coefficients: Vec<f64> },
    /// `theta`.
    EquidistantFisheye,
    /// Monotone cubic (Fritsch-Carlson) through `(theta, radius)` samples
    /// starting at `(0, 0)`.
    SampledLut { samples: Vec<(f64, f64)> },
}

/// A lens profile scaled to pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionProfile {
    kind: ProfileKind,
    /// Pixels per unit of normalized radius.
    focal_scale: f64,
    /// Field angle beyond which the profile is not valid.
    max_field_angle: f64,
    lut: Option<MonotoneCubic>,
}

const MONOTONE_CHECK_SAMPLES: usize = 2048;

impl DistortionProfile {
    pub fn new(kind: ProfileKind, focal_scale: f64, max_field_angle: f64) -> Result<Self, OpticsError> {
        if !(focal_scale.is_finite() && focal_scale > 0.0) {
            return Err(OpticsError::InvalidProfile(format!(
                "focal scale must be positive, got {focal_scale}"
            )));
        }
        if !(max_field_angle.is_finite() && max_field_angle > 0.0) {
            return Err(OpticsError::InvalidProfile(format!(
                "max field angle must be positive, got {max_field_angle}"
            )));
        }
        let lut = match &kind {
            ProfileKind::Identity if max_field_angle >= std::f64::consts::FRAC_PI_2 => {
                return Err(OpticsError::InvalidProfile(
                    "rectilinear profile needs a field angle below 90 degrees".into(),
                ));
            }
            ProfileKind::RadialPolynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(OpticsError::InvalidProfile(
                        "polynomial needs finite coefficients".into(),
                    ));
                }
                None
            }
            ProfileKind::SampledLut { samples } => Some(MonotoneCubic::new(samples)?),
            _ => None,
        };
        let profile = Self { kind, focal_scale, max_field_angle, lut };
        if let Some(lut) = &profile.lut {
            if lut.max_x() < max_field_angle {
                return Err(OpticsError::InvalidProfile(format!(
                    "LUT covers {} rad but the valid field extends to {max_field_angle} rad",
                    lut.max_x()
                )));
            }
        }
        profile.check_monotone()?;
        Ok(profile)
    }

    pub fn identity(focal_scale: f64, max_field_angle: f64) -> Result<Self, OpticsError> {
        Self::new(ProfileKind::Identity, focal_scale, max_field_angle)
    }

    pub fn equidistant(focal_scale: f64, max_field_angle: f64) -> Result<Self, OpticsError> {
        Self::new(ProfileKind::EquidistantFisheye, focal_scale, max_field_angle)
    }

    pub fn polynomial(
        coefficients: Vec<f64>,
        focal_scale: f64,
        max_field_angle: f64,
    ) -> Result<Self, OpticsError> {
        Self::new(ProfileKind::RadialPolynomial { coefficients }, focal_scale, max_field_angle)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn focal_scale(&self) -> f64 {
        self.focal_scale
    }

    pub fn max_field_angle(&self) -> f64 {
        self.max_field_angle
    }

    fn check_monotone(&self) -> Result<(), OpticsError> {
        let mut prev = self.normalized_radius(0.0);
        if prev.abs() > 1e-12 {
            return Err(OpticsError::InvalidProfile("profile must map 0 to 0".into()));
        }
        for i in 1..=MONOTONE_CHECK_SAMPLES {
            let theta = self.max_field_angle * i as f64 / MONOTONE_CHECK_SAMPLES as f64;
            let r = self.normalized_radius(theta);
            if !(r > prev) {
                return Err(OpticsError::NonMonotoneProfile { angle: theta });
            }
            prev = r;
        }
        Ok(())
    }

    /// Normalized radius at field angle `theta`. No range check.
    pub fn normalized_radius(&self, theta: f64) -> f64 {
        match &self.kind {
            ProfileKind::Identity => theta.tan(),
            ProfileKind::EquidistantFisheye => theta,
            ProfileKind::RadialPolynomial { coefficients } => {
                // Horner on c1 + c2 t + ..., times t
                let mut acc = 0.0;
                for c in coefficients.iter().rev() {
                    acc = acc * theta + c;
                }
                acc * theta
            }
            ProfileKind::SampledLut { .. } => self.lut.as_ref().map_or(0.0, |l| l.eval(theta)),
        }
    }

    fn normalized_slope(&self, theta: f64) -> f64 {
        match &self.kind {
            ProfileKind::Identity => {
                let c = theta.cos();
                1.0 / (c * c)
            }
            ProfileKind::EquidistantFisheye => 1.0,
            ProfileKind::RadialPolynomial { coefficients } => {
                let mut acc = 0.0;
                for (i, c) in coefficients.iter().enumerate().rev() {
                    acc = acc * theta + c * (i + 1) as f64;
                }
                acc
            }
            ProfileKind::SampledLut { .. } => self.lut.as_ref().map_or(0.0, |l| l.slope(theta)),
        }
    }

    /// Image radius in pixels at field angle `theta`, or `None` outside the
    /// valid field.
    pub fn radius_px(&self, theta: f64) -> Option<f64> {
        (0.0..=self.max_field_angle)
            .contains(&theta)
            .then(|| self.focal_scale * self.normalized_radius(theta))
    }

    /// Field angle that images at `radius_px`, or `None` outside the valid
    /// field.
    pub fn field_angle(&self, radius_px: f64) -> Option<f64> {
        if !(radius_px >= 0.0) {
            return None;
        }
        let target = radius_px / self.focal_scale;
        if target == 0.0 {
            return Some(0.0);
        }
        let r_max = self.normalized_radius(self.max_field_angle);
        if target > r_max {
            return None;
        }
        // safeguarded Newton on a monotone function
        let (mut lo, mut hi) = (0.0, self.max_field_angle);
        let mut theta = (target / r_max * self.max_field_angle).clamp(lo, hi);
        for _ in 0..100 {
            let f = self.normalized_radius(theta) - target;
            if f == 0.0 {
                return Some(theta);
            }
            if f > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let slope = self.normalized_slope(theta);
            let mut next = theta - f / slope;
            if !(next > lo && next < hi) || !slope.is_finite() || slope <= 0.0 {
                next = 0.5 * (lo + hi);
            }
            if (next - theta).abs() <= 1e-15 * theta.max(1.0) {
                return Some(next);
            }
            theta = next;
        }
        Some(theta)
    }
}

/// Piecewise-cubic Hermite interpolant with Fritsch-Carlson slopes; preserves
/// monotonicity of the samples.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub(crate) fn new(samples: &[(f64, f64)]) -> Result<Self, OpticsError> {
        if samples.len() < 2 {
            return Err(OpticsError::InvalidProfile("LUT needs at least two samples".into()));
        }
        if samples[0] != (0.0, 0.0) {
            return Err(OpticsError::InvalidProfile("LUT must start at (0, 0)".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
                return Err(OpticsError::InvalidProfile("LUT angles must increase".into()));
            }
            if !(w[1].1 > w[0].1) || !w[1].1.is_finite() {
                return Err(OpticsError::NonMonotoneProfile { angle: w[1].0 });
            }
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let n = xs.len();
        let secants: Vec<f64> =
            (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = 0.5 * (secants[i - 1] + secants[i]);
        }
        for i in 0..n - 1 {
            let a = slopes[i] / secants[i];
            let b = slopes[i + 1] / secants[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[i] = tau * a * secants[i];
                slopes[i + 1] = tau * b * secants[i];
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub(crate) fn max_x(&self) -> f64 {
        *self.xs.last().unwrap_or(&0.0)
    }

    fn segment(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub(crate) fn slope(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h + d10 * self.slopes[i] + d11 * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_monotone_polynomial() {
        // theta - theta^3 turns over at 1/sqrt(3) rad
        let err = DistortionProfile::polynomial(vec![1.0, 0.0, -1.0], 100.0, 1.0).unwrap_err();
        assert!(matches!(err, OpticsError::NonMonotoneProfile { .. }));
        assert!(DistortionProfile::polynomial(vec![1.0, 0.0, -1.0], 100.0, 0.5).is_ok());
    }

    #[test]
    fn rejects_bad_luts() {
        let not_from_zero = vec![(0.1, 0.1), (0.5, 0.6)];
        assert!(DistortionProfile::new(
            ProfileKind::SampledLut { samples: not_from_zero },
            1.0,
            0.5
        )
        .is_err());
        let decreasing = vec![(0.0, 0.0), (0.5, 0.6), (1.0, 0.4)];
        assert!(matches!(
            DistortionProfile::new(ProfileKind::SampledLut { samples: decreasing }, 1.0, 1.0),
            Err(OpticsError::NonMonotoneProfile { .. })
        ));
        let short = vec![(0.0, 0.0), (0.5, 0.6)];
        assert!(DistortionProfile::new(ProfileKind::SampledLut { samples: short }, 1.0, 1.0).is_err());
    }

    #[test]
    fn lut_reproduces_samples_and_linear_data() {
        let samples: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 * 0.1, i as f64 * 0.2)).collect();
        let p = DistortionProfile::new(ProfileKind::SampledLut { samples }, 1.0, 1.0).unwrap();
        for i in 0..=100 {
            let t = i as f64 * 0.01;
            assert!((p.normalized_radius(t) - 2.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn lut_stays_monotone_on_steep_data() {
        let samples = vec![(0.0, 0.0), (0.2, 0.01), (0.4, 0.02), (0.6, 0.9), (0.8, 0.91), (1.0, 0.92)];
        let p = DistortionProfile::new(ProfileKind::SampledLut { samples }, 1.0, 1.0).unwrap();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let r = p.normalized_radius(i as f64 * 0.001);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn out_of_field_is_none() {
        let p = DistortionProfile::equidistant(1000.0, 1.0).unwrap();
        assert_eq!(p.radius_px(1.01), None);
        assert_eq!(p.field_angle(1000.5), None);
        assert_eq!(p.field_angle(-1.0), None);
        assert_eq!(p.field_angle(0.0), Some(0.0));
    }

    proptest! {
        #[test]
        fn inverse_round_trips(theta in 0.0f64..0.95) {
            let profiles = [
                DistortionProfile::identity(1500.0, 1.0).unwrap(),
                DistortionProfile::equidistant(1500.0, 1.0).unwrap(),
                DistortionProfile::polynomial(vec![1.0, 0.0, 0.025], 1718.87, 1.0).unwrap(),
                DistortionProfile::new(
                    ProfileKind::SampledLut {
                        samples: (0..=20).map(|i| { let t = i as f64 * 0.05; (t, t + 0.1 * t * t) }).collect(),
                    },
                    1500.0,
                    1.0,
                ).unwrap(),
            ];
            for p in &profiles {
                let r = p.radius_px(theta).unwrap();
                let back = p.field_angle(r).unwrap();
                prop_assert!((back - theta).abs() < 1e-10, "{:?}: {} vs {}", p.kind(), back, theta);
            }
        }
    }
}
