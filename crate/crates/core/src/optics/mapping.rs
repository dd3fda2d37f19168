use super::{DistortionProfile, OpticsError};

/// Image size as `(columns, rows)`.
pub type Dims = (u32, u32);

/// Optical centers in pixel-index coordinates (pixel `p` has its center at
/// `p`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalCenters {
    pub display: (f64, f64),
    pub camera: (f64, f64),
}

impl OpticalCenters {
    /// Geometric centers of both images.
    pub fn centered(display_dims: Dims, camera_dims: Dims) -> Self {
        let c = |d: Dims| ((f64::from(d.0) - 1.0) / 2.0, (f64::from(d.1) - 1.0) / 2.0);
        Self { display: c(display_dims), camera: c(camera_dims) }
    }
}

/// Display/camera profile pair with their image geometry; maps single points
/// in either direction.
#[derive(Debug, Clone)]
pub struct Remap {
    camera_profile: DistortionProfile,
    display_profile: DistortionProfile,
    display_dims: Dims,
    camera_dims: Dims,
    centers: OpticalCenters,
}

const EDGE_EPS: f64 = 1e-9;

fn inside(p: (f64, f64), dims: Dims) -> bool {
    p.0 >= 0.0 && p.1 >= 0.0 && p.0 <= f64::from(dims.0) - 1.0 && p.1 <= f64::from(dims.1) - 1.0
}

impl Remap {
    pub fn new(
        camera_profile: DistortionProfile,
        display_profile: DistortionProfile,
        display_dims: Dims,
        camera_dims: Dims,
        centers: OpticalCenters,
    ) -> Result<Self, OpticsError> {
        for (dims, name) in [(display_dims, "display"), (camera_dims, "camera")] {
            if dims.0 == 0 || dims.1 == 0 {
                return Err(OpticsError::EmptyImage(name));
            }
        }
        if !inside(centers.display, display_dims) {
            return Err(OpticsError::CenterOutsideImage { image: "display", center: centers.display });
        }
        if !inside(centers.camera, camera_dims) {
            return Err(OpticsError::CenterOutsideImage { image: "camera", center: centers.camera });
        }
        Ok(Self { camera_profile, display_profile, display_dims, camera_dims, centers })
    }

    pub fn display_dims(&self) -> Dims {
        self.display_dims
    }

    pub fn camera_dims(&self) -> Dims {
        self.camera_dims
    }

    pub fn centers(&self) -> OpticalCenters {
        self.centers
    }

    fn transfer(
        from: &DistortionProfile,
        to: &DistortionProfile,
        from_center: (f64, f64),
        to_center: (f64, f64),
        to_dims: Dims,
        p: (f64, f64),
    ) -> Option<(f64, f64)> {
        let dx = p.0 - from_center.0;
        let dy = p.1 - from_center.1;
        let r = dx.hypot(dy);
        let q = if r == 0.0 {
            to_center
        } else {
            let theta = from.field_angle(r)?;
            let scale = to.radius_px(theta)? / r;
            (to_center.0 + dx * scale, to_center.1 + dy * scale)
        };
        // absorb round-off at the image border
        let snap = |v: f64, n: u32| {
            let top = f64::from(n) - 1.0;
            if v < 0.0 && v > -EDGE_EPS {
                0.0
            } else if v > top && v < top + EDGE_EPS {
                top
            } else {
                v
            }
        };
        let q = (snap(q.0, to_dims.0), snap(q.1, to_dims.1));
        inside(q, to_dims).then_some(q)
    }

    /// Continuous camera coordinate seen by display pixel `p`, or `None` when
    /// the ray leaves either profile's field or the camera image.
    pub fn display_to_camera(&self, p: (f64, f64)) -> Option<(f64, f64)> {
        Self::transfer(
            &self.display_profile,
            &self.camera_profile,
            self.centers.display,
            self.centers.camera,
            self.camera_dims,
            p,
        )
    }

    pub fn camera_to_display(&self, p: (f64, f64)) -> Option<(f64, f64)> {
        Self::transfer(
            &self.camera_profile,
            &self.display_profile,
            self.centers.camera,
            self.centers.display,
            self.display_dims,
            p,
        )
    }
}

/// Per-display-pixel camera source coordinates, optionally on a subsampled
/// grid of the display.
///
/// Grid cell `(i, j)` stands for display pixel `(i * stride, j * stride)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMapping {
    display_dims: Dims,
    camera_dims: Dims,
    stride: u32,
    grid_dims: Dims,
    source: Vec<(f64, f64)>,
    valid: Vec<bool>,
}

impl PixelMapping {
    /// Assembles a mapping from precomputed parts; invalid entries of
    /// `source` are ignored.
    pub fn from_parts(
        display_dims: Dims,
        camera_dims: Dims,
        stride: u32,
        source: Vec<(f64, f64)>,
        valid: Vec<bool>,
    ) -> Result<Self, OpticsError> {
        if stride == 0 {
            return Err(OpticsError::ZeroStride);
        }
        let grid_dims = (display_dims.0.div_ceil(stride), display_dims.1.div_ceil(stride));
        let n = grid_dims.0 as usize * grid_dims.1 as usize;
        if source.len() != n || valid.len() != n {
            return Err(OpticsError::DimensionMismatch(format!(
                "mapping grid {}x{} needs {n} entries, got {} sources and {} flags",
                grid_dims.0,
                grid_dims.1,
                source.len(),
                valid.len()
            )));
        }
        for (s, &v) in source.iter().zip(&valid) {
            if v && !inside(*s, camera_dims) {
                return Err(OpticsError::DimensionMismatch(format!(
                    "source ({}, {}) lies outside the {}x{} camera",
                    s.0, s.1, camera_dims.0, camera_dims.1
                )));
            }
        }
        Ok(Self { display_dims, camera_dims, stride, grid_dims, source, valid })
    }

    /// Identity mapping between equally sized images.
    pub fn identity(dims: Dims) -> Self {
        let mut source = Vec::with_capacity(dims.0 as usize * dims.1 as usize);
        for r in 0..dims.1 {
            for c in 0..dims.0 {
                source.push((f64::from(c), f64::from(r)));
            }
        }
        let valid = vec![true; source.len()];
        Self { display_dims: dims, camera_dims: dims, stride: 1, grid_dims: dims, source, valid }
    }

    pub fn display_dims(&self) -> Dims {
        self.display_dims
    }

    pub fn camera_dims(&self) -> Dims {
        self.camera_dims
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn grid_dims(&self) -> Dims {
        self.grid_dims
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Display pixel represented by grid cell `(i, j)`.
    pub fn display_pixel(&self, i: u32, j: u32) -> (u32, u32) {
        (i * self.stride, j * self.stride)
    }

    /// Display row of the grid row `j`.
    pub fn display_row(&self, j: u32) -> u32 {
        j * self.stride
    }

    pub fn index(&self, i: u32, j: u32) -> usize {
        j as usize * self.grid_dims.0 as usize + i as usize
    }

    pub fn source(&self, idx: usize) -> Option<(f64, f64)> {
        self.valid[idx].then(|| self.source[idx])
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid[idx]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    /// Last camera row contributing to grid cell `idx` (ceil of the source
    /// row).
    pub fn last_source_row(&self, idx: usize) -> Option<u32> {
        self.source(idx).map(|s| s.1.ceil() as u32)
    }

    /// Grid rows whose display row falls in `rows` (display-row range).
    pub fn grid_rows_in(&self, rows: std::ops::Range<u32>) -> std::ops::Range<u32> {
        let start = rows.start.div_ceil(self.stride).min(self.grid_dims.1);
        let end = rows.end.div_ceil(self.stride).min(self.grid_dims.1);
        start..end.max(start)
    }
}

/// Materializes the display-to-camera mapping for every `stride`-th display
/// pixel.
pub fn build_mapping(
    camera_profile: &DistortionProfile,
    display_profile: &DistortionProfile,
    display_dims: Dims,
    camera_dims: Dims,
    centers: OpticalCenters,
    stride: u32,
) -> Result<PixelMapping, OpticsError> {
    let remap = Remap::new(
        camera_profile.clone(),
        display_profile.clone(),
        display_dims,
        camera_dims,
        centers,
    )?;
    build_mapping_from(&remap, stride)
}

pub fn build_mapping_from(remap: &Remap, stride: u32) -> Result<PixelMapping, OpticsError> {
    if stride == 0 {
        return Err(OpticsError::ZeroStride);
    }
    let display_dims = remap.display_dims();
    let grid = (display_dims.0.div_ceil(stride), display_dims.1.div_ceil(stride));
    let n = grid.0 as usize * grid.1 as usize;
    let mut source = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for j in 0..grid.1 {
        for i in 0..grid.0 {
            let p = (f64::from(i * stride), f64::from(j * stride));
            match remap.display_to_camera(p) {
                Some(s) => {
                    source.push(s);
                    valid.push(true);
                }
                None => {
                    source.push((f64::NAN, f64::NAN));
                    valid.push(false);
                }
            }
        }
    }
    Ok(PixelMapping {
        display_dims,
        camera_dims: remap.camera_dims(),
        stride,
        grid_dims: grid,
        source,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_profiles_give_identity_mapping() {
        let dims = (64, 48);
        for profile in [
            DistortionProfile::identity(40.0, 1.4).unwrap(),
            DistortionProfile::equidistant(40.0, 1.4).unwrap(),
        ] {
            let m = build_mapping(
                &profile,
                &profile,
                dims,
                dims,
                OpticalCenters::centered(dims, dims),
                1,
            )
            .unwrap();
            for j in 0..dims.1 {
                for i in 0..dims.0 {
                    let s = m.source(m.index(i, j)).unwrap();
                    assert!((s.0 - f64::from(i)).abs() < 1e-9 && (s.1 - f64::from(j)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn center_maps_to_center() {
        let d = DistortionProfile::polynomial(vec![1.0, 0.0, 0.3], 30.0, 1.0).unwrap();
        let c = DistortionProfile::equidistant(33.0, 1.5).unwrap();
        let centers = OpticalCenters { display: (20.0, 10.0), camera: (31.5, 17.25) };
        let remap = Remap::new(c, d, (41, 21), (64, 40), centers).unwrap();
        assert_eq!(remap.display_to_camera((20.0, 10.0)), Some((31.5, 17.25)));
    }

    #[test]
    fn center_outside_image_is_rejected() {
        let p = DistortionProfile::equidistant(10.0, 1.0).unwrap();
        let err = Remap::new(
            p.clone(),
            p,
            (10, 10),
            (10, 10),
            OpticalCenters { display: (4.5, 4.5), camera: (12.0, 4.5) },
        )
        .unwrap_err();
        assert!(matches!(err, OpticsError::CenterOutsideImage { image: "camera", .. }));
    }

    #[test]
    fn rays_beyond_field_are_masked() {
        let d = DistortionProfile::equidistant(10.0, 0.5).unwrap();
        let c = DistortionProfile::equidistant(10.0, 1.0).unwrap();
        let dims = (41, 41);
        let m = build_mapping(&c, &d, dims, dims, OpticalCenters::centered(dims, dims), 1).unwrap();
        // radius 5 px = 0.5 rad is the edge; corners are far outside
        assert!(m.is_valid(m.index(20, 20)));
        assert!(m.is_valid(m.index(25, 20)));
        assert!(!m.is_valid(m.index(26, 20)));
        assert!(!m.is_valid(m.index(0, 0)));
    }

    #[test]
    fn strided_grid_covers_display() {
        let p = DistortionProfile::equidistant(1000.0, 1.0).unwrap();
        let m = build_mapping(
            &p,
            &p,
            (2768, 3000),
            (2768, 3000),
            OpticalCenters::centered((2768, 3000), (2768, 3000)),
            8,
        )
        .unwrap();
        assert_eq!(m.grid_dims(), (346, 375));
        assert_eq!(m.display_pixel(345, 374), (2760, 2992));
        assert_eq!(m.grid_rows_in(0..8), 0..1);
        assert_eq!(m.grid_rows_in(1..9), 1..2);
        assert_eq!(m.grid_rows_in(2990..3000), 374..375);
    }
}
