use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::optics::PixelMapping;

/// Largest 10-bit sample.
const MAX_10: u16 = 1023;
/// Linear intermediate scale: 10-bit value times 256.
const LIN_MAX: i64 = 1023 * 256;
const LUT_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfaPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
    /// Single-channel sensor; every sample feeds all three channels.
    Mono,
}

impl CfaPattern {
    /// Channel (0 red, 1 green, 2 blue) sampled at `(x, y)`.
    fn channel(self, x: i64, y: i64) -> usize {
        let (dx, dy) = match self {
            CfaPattern::Rggb | CfaPattern::Mono => (0, 0),
            CfaPattern::Grbg => (1, 0),
            CfaPattern::Gbrg => (0, 1),
            CfaPattern::Bggr => (1, 1),
        };
        match (((x + dx) & 1), ((y + dy) & 1)) {
            (0, 0) => 0,
            (1, 1) => 2,
            _ => 1,
        }
    }

    fn row_margin(self) -> u32 {
        if self == CfaPattern::Mono {
            0
        } else {
            1
        }
    }
}

/// Fixed-point color stage: Q12 3x3 matrix and an 8-bit gamma table.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorParams {
    cfa: CfaPattern,
    matrix: [[f64; 3]; 3],
    matrix_q12: [[i64; 3]; 3],
    gamma: f64,
    lut: Vec<u8>,
}

impl ColorParams {
    pub fn new(cfa: CfaPattern, matrix: [[f64; 3]; 3], gamma: f64) -> Result<Self, PipelineError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(PipelineError::Config(format!("gamma must be positive, got {gamma}")));
        }
        if matrix.iter().flatten().any(|m| !m.is_finite() || m.abs() > 64.0) {
            return Err(PipelineError::Config("color matrix entries must be finite and below 64".into()));
        }
        let matrix_q12 = matrix.map(|row| row.map(|m| (m * 4096.0).round() as i64));
        let top = (LIN_MAX >> 6) as f64;
        let lut = (0..LUT_LEN)
            .map(|i| {
                let t = (i as f64 / top).min(1.0);
                (255.0 * t.powf(1.0 / gamma) + 0.5).floor() as u8
            })
            .collect();
        Ok(Self { cfa, matrix, matrix_q12, gamma, lut })
    }

    pub fn identity(cfa: CfaPattern) -> Self {
        Self::new(cfa, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 1.0)
            .expect("identity color is valid")
    }

    pub fn cfa(&self) -> CfaPattern {
        self.cfa
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.matrix
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Linear `value * 256` triple to 8-bit RGB.
    fn encode(&self, lin: [i64; 3]) -> [u8; 3] {
        let mut out = [0u8; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let m = &self.matrix_q12[c];
            let acc = m[0] * lin[0] + m[1] * lin[1] + m[2] * lin[2];
            let v = (acc + 2048).div_euclid(4096).clamp(0, LIN_MAX);
            *o = self.lut[(v >> 6) as usize];
        }
        out
    }
}

/// A full 10-bit raw mosaic frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraFrame {
    width: u32,
    height: u32,
    data: Vec<u16>,
}

impl CameraFrame {
    pub fn new(width: u32, height: u32, data: Vec<u16>) -> Result<Self, PipelineError> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize {
            return Err(PipelineError::Config(format!(
                "{width}x{height} mosaic needs {} samples, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| **v > MAX_10) {
            return Err(PipelineError::Config(format!("mosaic sample {v} exceeds 10 bits")));
        }
        Ok(Self { width, height, data })
    }

    /// Expands 8-bit samples to 10 bits with `round(v * 1023 / 255)`.
    pub fn from_8bit(width: u32, height: u32, data: &[u8]) -> Result<Self, PipelineError> {
        let expanded = data.iter().map(|&v| ((u32::from(v) * 1023 * 2 + 255) / 510) as u16).collect();
        Self::new(width, height, expanded)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    /// Copies rows `rows` into a partial buffer.
    pub fn rows(&self, rows: Range<u32>) -> RowBuffer {
        let end = rows.end.min(self.height);
        let start = rows.start.min(end);
        let w = self.width as usize;
        RowBuffer {
            width: self.width,
            height: self.height,
            first_row: start,
            data: self.data[start as usize * w..end as usize * w].to_vec(),
        }
    }

    pub fn all_rows(&self) -> RowBuffer {
        self.rows(0..self.height)
    }
}

/// A contiguous band of camera rows out of a `width` x `height` mosaic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBuffer {
    width: u32,
    height: u32,
    first_row: u32,
    data: Vec<u16>,
}

impl RowBuffer {
    pub fn rows_held(&self) -> Range<u32> {
        let n = (self.data.len() / self.width as usize) as u32;
        self.first_row..self.first_row + n
    }

    fn row(&self, k: u32) -> Result<&[u16], PipelineError> {
        if !self.rows_held().contains(&k) {
            return Err(PipelineError::MissingCameraRow(k));
        }
        let w = self.width as usize;
        let off = (k - self.first_row) as usize * w;
        Ok(&self.data[off..off + w])
    }
}

/// Mirror about the edge sample without repeating it, which keeps the CFA
/// parity of the reflected position.
fn reflect(i: i64, n: u32) -> u32 {
    let n = i64::from(n);
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r.clamp(0, n - 1) as u32
}

/// 8-bit interleaved RGB rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Stacks images of equal width top to bottom.
    pub fn concat(parts: &[RgbImage]) -> Option<RgbImage> {
        let width = parts.first()?.width;
        if parts.iter().any(|p| p.width != width) {
            return None;
        }
        Some(RgbImage {
            width,
            height: parts.iter().map(|p| p.height).sum(),
            data: parts.iter().flat_map(|p| p.data.iter().copied()).collect(),
        })
    }

    /// Binary portable pixmap (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

/// Quantized bilinear footprint of a source coordinate: top-left sample and
/// Q8 fractions.
fn footprint(src: (f64, f64)) -> (i64, i64, i64, i64) {
    let xq = (src.0 * 256.0).round() as i64;
    let yq = (src.1 * 256.0).round() as i64;
    (xq >> 8, yq >> 8, xq & 255, yq & 255)
}

/// Camera rows the compositor reads for display rows `slice_rows`, or `None`
/// if no valid pixel falls in the slice.
pub fn required_camera_rows(
    mapping: &PixelMapping,
    slice_rows: Range<u32>,
    cfa: CfaPattern,
) -> Option<Range<u32>> {
    let margin = i64::from(cfa.row_margin());
    let h = mapping.camera_dims().1;
    let mut lo = u32::MAX;
    let mut hi = 0u32;
    for j in mapping.grid_rows_in(slice_rows) {
        for i in 0..mapping.grid_dims().0 {
            let Some(src) = mapping.source(mapping.index(i, j)) else { continue };
            let (_, y0, _, fy) = footprint(src);
            let y1 = if fy > 0 { y0 + 1 } else { y0 };
            for y in [y0 - margin, y1 + margin] {
                let r = reflect(y, h);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            // reflection can pull the footprint inward; cover the span too
            lo = lo.min(reflect(y0, h));
            hi = hi.max(reflect(y1, h));
        }
    }
    (lo <= hi).then(|| lo..hi + 1)
}

/// Demosaics, color-corrects and gamma-encodes the display pixels of the
/// mapping grid rows falling in `slice_rows`.
///
/// Each pixel is bilinearly interpolated (Q8 source position) from demosaiced
/// values at the four surrounding integer samples, so the result depends only
/// on the pixel and never on how rows are split into slices. Invalid mapping
/// pixels are black.
pub fn composite_slice(
    slice_rows: Range<u32>,
    camera_rows: &RowBuffer,
    mapping: &PixelMapping,
    color: &ColorParams,
) -> Result<RgbImage, PipelineError> {
    if (camera_rows.width, camera_rows.height) != mapping.camera_dims() {
        return Err(PipelineError::Config(format!(
            "row buffer is {}x{}, mapping expects {}x{}",
            camera_rows.width,
            camera_rows.height,
            mapping.camera_dims().0,
            mapping.camera_dims().1
        )));
    }
    if color.cfa != CfaPattern::Mono && (camera_rows.width < 2 || camera_rows.height < 2) {
        return Err(PipelineError::Config("a color mosaic needs at least 2x2 samples".into()));
    }
    let grid_rows = mapping.grid_rows_in(slice_rows);
    let width = mapping.grid_dims().0;
    let mut data = Vec::with_capacity(3 * width as usize * grid_rows.len());
    for j in grid_rows.clone() {
        for i in 0..width {
            let rgb = match mapping.source(mapping.index(i, j)) {
                None => [0, 0, 0],
                Some(src) => color.encode(interpolate(src, camera_rows, color.cfa)?),
            };
            data.extend_from_slice(&rgb);
        }
    }
    Ok(RgbImage { width, height: grid_rows.len() as u32, data })
}

fn interpolate(src: (f64, f64), buf: &RowBuffer, cfa: CfaPattern) -> Result<[i64; 3], PipelineError> {
    let (x0, y0, fx, fy) = footprint(src);
    let taps = [
        (0, 0, (256 - fx) * (256 - fy)),
        (1, 0, fx * (256 - fy)),
        (0, 1, (256 - fx) * fy),
        (1, 1, fx * fy),
    ];
    let win = Window::fetch(buf, cfa, x0, y0, fx > 0, fy > 0)?;
    let mut acc = [0i64; 3];
    for (dx, dy, w) in taps {
        if w == 0 {
            continue;
        }
        let d = win.demosaic(cfa, x0 + dx, y0 + dy, 1 + dx as usize, 1 + dy as usize);
        for c in 0..3 {
            acc[c] += w * d[c];
        }
    }
    Ok(acc.map(|a| (a + 512) >> 10))
}

/// The 4x4 samples around a bilinear footprint, fetched once per pixel.
/// Entry `[j][i]` holds the (reflected) sample at `(x0 - 1 + i, y0 - 1 + j)`.
/// Rows and columns no nonzero tap reaches are left unfetched, so a slice
/// never touches camera rows outside its required range.
struct Window {
    v: [[i64; 4]; 4],
}

impl Window {
    fn fetch(buf: &RowBuffer, cfa: CfaPattern, x0: i64, y0: i64, right: bool, down: bool) -> Result<Self, PipelineError> {
        let m = i64::from(cfa.row_margin());
        let x_hi = x0 + i64::from(right) + m;
        let y_hi = y0 + i64::from(down) + m;
        let mut v = [[0i64; 4]; 4];
        for y in y0 - m..=y_hi {
            let row = buf.row(reflect(y, buf.height))?;
            let dst = &mut v[(y - y0 + 1) as usize];
            for x in x0 - m..=x_hi {
                dst[(x - x0 + 1) as usize] = i64::from(row[reflect(x, buf.width) as usize]);
            }
        }
        Ok(Self { v })
    }

    /// Bilinear demosaic at mosaic position `(x, y)`, window cell `(i, j)`,
    /// in units of value * 4.
    fn demosaic(&self, cfa: CfaPattern, x: i64, y: i64, i: usize, j: usize) -> [i64; 3] {
        let v = &self.v;
        let here = v[j][i];
        if cfa == CfaPattern::Mono {
            return [4 * here; 3];
        }
        let site = cfa.channel(x, y);
        let mut out = [0i64; 3];
        out[site] = 4 * here;
        if site == 1 {
            out[cfa.channel(x + 1, y)] = 2 * (v[j][i - 1] + v[j][i + 1]);
            out[cfa.channel(x, y + 1)] = 2 * (v[j - 1][i] + v[j + 1][i]);
        } else {
            out[1] = v[j][i - 1] + v[j][i + 1] + v[j - 1][i] + v[j + 1][i];
            out[2 - site] = v[j - 1][i - 1] + v[j - 1][i + 1] + v[j + 1][i - 1] + v[j + 1][i + 1];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{build_mapping, DistortionProfile, OpticalCenters};

    #[test]
    fn flat_field_stays_flat() {
        for cfa in [CfaPattern::Rggb, CfaPattern::Bggr, CfaPattern::Grbg, CfaPattern::Gbrg] {
            let frame = CameraFrame::new(16, 12, vec![700; 16 * 12]).unwrap();
            let cam = DistortionProfile::equidistant(10.0, 1.2).unwrap();
            let disp = DistortionProfile::polynomial(vec![1.0, 0.0, 0.05], 10.0, 0.6).unwrap();
            let centers = OpticalCenters::centered((14, 10), (16, 12));
            let m = build_mapping(&cam, &disp, (14, 10), (16, 12), centers, 1).unwrap();
            let img = composite_slice(0..10, &frame.all_rows(), &m, &ColorParams::identity(cfa)).unwrap();
            let expect = (255.0 * 700.0 / 1023.0 + 0.5f64).floor() as u8;
            for (idx, px) in img.data.chunks(3).enumerate() {
                if m.is_valid(idx) {
                    assert_eq!(px, [expect; 3]);
                }
            }
        }
    }

    #[test]
    fn identity_roundtrips_8bit_mono() {
        let input: Vec<u8> = (0..=255).chain((0..=255).rev()).collect();
        let frame = CameraFrame::from_8bit(32, 16, &input).unwrap();
        let m = PixelMapping::identity((32, 16));
        let img = composite_slice(0..16, &frame.all_rows(), &m, &ColorParams::identity(CfaPattern::Mono))
            .unwrap();
        let got: Vec<u8> = img.data.chunks(3).map(|p| p[0]).collect();
        assert_eq!(got, input);
    }

    #[test]
    fn missing_row_is_an_error() {
        let frame = CameraFrame::new(8, 8, vec![1; 64]).unwrap();
        let m = PixelMapping::identity((8, 8));
        let err = composite_slice(0..8, &frame.rows(0..4), &m, &ColorParams::identity(CfaPattern::Rggb))
            .unwrap_err();
        assert!(matches!(err, PipelineError::MissingCameraRow(4)));
    }

    #[test]
    fn required_rows_cover_demosaic_neighbors() {
        let m = PixelMapping::identity((8, 8));
        assert_eq!(required_camera_rows(&m, 2..4, CfaPattern::Rggb), Some(1..5));
        assert_eq!(required_camera_rows(&m, 0..1, CfaPattern::Rggb), Some(0..2));
        assert_eq!(required_camera_rows(&m, 2..4, CfaPattern::Mono), Some(2..4));
        let frame = CameraFrame::new(8, 8, (0..64).map(|v| v * 16).collect()).unwrap();
        let color = ColorParams::identity(CfaPattern::Rggb);
        let part = composite_slice(2..4, &frame.rows(1..5), &m, &color).unwrap();
        let full = composite_slice(0..8, &frame.all_rows(), &m, &color).unwrap();
        assert_eq!(part.data, full.data[2 * 8 * 3..4 * 8 * 3]);
    }

    #[test]
    fn reflection_preserves_parity() {
        assert_eq!(reflect(-1, 8), 1);
        assert_eq!(reflect(8, 8), 6);
        assert_eq!(reflect(3, 8), 3);
    }

    #[test]
    fn ppm_header() {
        let img = RgbImage { width: 2, height: 1, data: vec![1, 2, 3, 4, 5, 6] };
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n2 1\n255\n"));
        assert_eq!(ppm.len(), 11 + 6);
    }
}
