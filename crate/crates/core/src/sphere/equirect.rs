use std::f64::consts::{PI, TAU};

use super::SphereCoord;
use crate::error::{Error, Result};

/// Read access shared by scalar maps and color frames in equirectangular
/// layout: column ↦ azimuth, row ↦ polar angle, row 0 at the north pole.
pub trait Panorama {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn channels(&self) -> usize;
    fn texel(&self, row: usize, col: usize, channel: usize) -> f64;
}

/// Scalar map over the equirectangular domain, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EquirectMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl EquirectMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("equirectangular map must be non-empty"));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", width * height),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("equirectangular map contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    /// Builds a map by evaluating `f` at every pixel center.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(SphereCoord) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(pixel_center(width, height, row, col)));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    pub fn same_dims(&self, other: &EquirectMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn pixel_coord(&self, row: usize, col: usize) -> SphereCoord {
        pixel_center(self.width, self.height, row, col)
    }

    /// Pixel containing a sphere position (nearest bin).
    pub fn pixel_of(&self, coord: &SphereCoord) -> (usize, usize) {
        pixel_of(self.width, self.height, coord)
    }

    /// Bilinear sample with azimuth wrap and pole clamping.
    pub fn sample(&self, coord: &SphereCoord) -> f64 {
        sample_bilinear(self, coord.phi(), coord.theta(), 0)
    }

    /// Rolls the map east by `cols` columns.
    pub fn shifted_columns(&self, cols: usize) -> Self {
        let w = self.width;
        let mut values = vec![0.0; self.values.len()];
        for row in 0..self.height {
            for col in 0..w {
                values[row * w + (col + cols) % w] = self.values[row * w + col];
            }
        }
        Self::from_raw(w, self.height, values)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum weighted by per-pixel solid angle.
    pub fn area_sum(&self) -> f64 {
        (0..self.height)
            .map(|row| {
                let a = pixel_solid_angle(self.width, self.height, row);
                a * self.values[row * self.width..(row + 1) * self.width]
                    .iter()
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Position of the largest value; ties resolve to the first pixel.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }
}

impl Panorama for EquirectMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        1
    }
    #[inline]
    fn texel(&self, row: usize, col: usize, _channel: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// 8-bit RGB panorama frame, channel-interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, rgb: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("frame must be non-empty"));
        }
        if rgb.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} bytes", width * height * 3),
                actual: format!("{} bytes", rgb.len()),
            });
        }
        Ok(Self { width, height, rgb })
    }

    /// Builds a frame from a per-pixel color function.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(SphereCoord) -> [u8; 3]) -> Self {
        let mut rgb = Vec::with_capacity(width * height * 3);
        for row in 0..height {
            for col in 0..width {
                rgb.extend_from_slice(&f(pixel_center(width, height, row, col)));
            }
        }
        Self { width, height, rgb }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn same_dims(&self, map: &EquirectMap) -> bool {
        self.width == map.width && self.height == map.height
    }
}

impl Panorama for Frame {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        3
    }
    #[inline]
    fn texel(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.rgb[(row * self.width + col) * 3 + channel] as f64
    }
}

pub(crate) fn pixel_center(width: usize, height: usize, row: usize, col: usize) -> SphereCoord {
    let phi = (row as f64 + 0.5) * PI / height as f64;
    let theta = (col as f64 + 0.5) * TAU / width as f64;
    // both already in range; skip validation
    SphereCoord::new(phi, theta).expect("pixel centers lie on the sphere")
}

pub(crate) fn pixel_of(width: usize, height: usize, coord: &SphereCoord) -> (usize, usize) {
    let row = ((coord.phi() / PI * height as f64).floor() as usize).min(height - 1);
    let col = ((coord.theta() / TAU * width as f64).floor() as usize) % width;
    (row, col)
}

/// Exact solid angle of a pixel in `row`.
pub(crate) fn pixel_solid_angle(width: usize, height: usize, row: usize) -> f64 {
    let dphi = PI / height as f64;
    let top = row as f64 * dphi;
    let bottom = top + dphi;
    TAU / width as f64 * (top.cos() - bottom.cos())
}

/// Continuous pixel coordinates (x along columns, y along rows) of a
/// direction given as polar and azimuth angles.
#[inline]
pub(crate) fn continuous_position(width: usize, height: usize, phi: f64, theta: f64) -> (f64, f64) {
    let x = theta / TAU * width as f64 - 0.5;
    let y = phi / PI * height as f64 - 0.5;
    (x, y)
}

/// Four bilinear taps `(flat index, weight)` at a continuous position.
#[inline]
pub(crate) fn bilinear_taps(width: usize, height: usize, x: f64, y: f64) -> [(usize, f64); 4] {
    let y = y.clamp(0.0, (height - 1) as f64);
    let y0 = y.floor();
    let fy = y - y0;
    let y0 = y0 as usize;
    let y1 = (y0 + 1).min(height - 1);
    let x0f = x.floor();
    let fx = x - x0f;
    let x0 = (x0f as i64).rem_euclid(width as i64) as usize;
    let x1 = (x0 + 1) % width;
    [
        (y0 * width + x0, (1.0 - fx) * (1.0 - fy)),
        (y0 * width + x1, fx * (1.0 - fy)),
        (y1 * width + x0, (1.0 - fx) * fy),
        (y1 * width + x1, fx * fy),
    ]
}

pub(crate) fn sample_bilinear<P: Panorama + ?Sized>(pano: &P, phi: f64, theta: f64, channel: usize) -> f64 {
    let (w, h) = (pano.width(), pano.height());
    let (x, y) = continuous_position(w, h, phi, theta);
    bilinear_taps(w, h, x, y)
        .iter()
        .map(|&(i, wgt)| wgt * pano.texel(i / w, i % w, channel))
        .sum()
}
