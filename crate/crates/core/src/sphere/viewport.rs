use std::f64::consts::PI;

use super::equirect::{bilinear_taps, continuous_position, pixel_center, Panorama};
use super::{dot, EquirectMap, SphereCoord};
use crate::error::{Error, Result};

/// Default full field of view of a viewport block.
pub const DEFAULT_FOV: f64 = PI / 3.0;
/// Default block side length in pixels.
pub const DEFAULT_RESOLUTION: usize = 224;

/// Square perspective viewport centered on a sphere position.
///
/// The block's up direction follows the local meridian toward the north
/// pole and columns increase eastward, matching the panorama's orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewportSpec {
    center: SphereCoord,
    fov: f64,
    resolution: usize,
}

impl ViewportSpec {
    pub fn new(center: SphereCoord, fov: f64, resolution: usize) -> Result<Self> {
        if !(fov > 0.0 && fov < PI) {
            return Err(Error::invalid(format!("field of view {fov} outside (0, π)")));
        }
        if resolution < 2 {
            return Err(Error::invalid("viewport resolution must be at least 2"));
        }
        Ok(Self {
            center,
            fov,
            resolution,
        })
    }

    pub fn with_defaults(center: SphereCoord) -> Self {
        Self {
            center,
            fov: DEFAULT_FOV,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn center(&self) -> SphereCoord {
        self.center
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn pixel_count(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Half-extent of the image plane at unit focal distance.
    fn half_extent(&self) -> f64 {
        (self.fov / 2.0).tan()
    }

    /// Angular radius of the frustum corners.
    pub fn corner_radius(&self) -> f64 {
        (self.half_extent() * 2f64.sqrt()).atan()
    }

    /// Orthonormal frame `(forward, east, north)` at the block center.
    fn basis(&self) -> [[f64; 3]; 3] {
        let (sp, cp) = self.center.phi().sin_cos();
        let (st, ct) = self.center.theta().sin_cos();
        let forward = [sp * ct, sp * st, cp];
        let east = [-st, ct, 0.0];
        let north = [-cp * ct, -cp * st, sp];
        [forward, east, north]
    }

    /// Image-plane coordinates of a pixel center.
    #[inline]
    fn plane_coords(&self, row: usize, col: usize) -> (f64, f64) {
        let t = self.half_extent();
        let r = self.resolution as f64;
        let x = t * (2.0 * (col as f64 + 0.5) / r - 1.0);
        let y = t * (1.0 - 2.0 * (row as f64 + 0.5) / r);
        (x, y)
    }

    /// Unit direction through a block pixel center.
    pub fn pixel_direction(&self, row: usize, col: usize) -> [f64; 3] {
        let [f, e, n] = self.basis();
        let (x, y) = self.plane_coords(row, col);
        let d = [
            f[0] + x * e[0] + y * n[0],
            f[1] + x * e[1] + y * n[1],
            f[2] + x * e[2] + y * n[2],
        ];
        let norm = dot(&d, &d).sqrt();
        [d[0] / norm, d[1] / norm, d[2] / norm]
    }

    /// Solid angle subtended by a block pixel.
    pub fn pixel_solid_angle(&self, row: usize, col: usize) -> f64 {
        let (x, y) = self.plane_coords(row, col);
        let step = 2.0 * self.half_extent() / self.resolution as f64;
        step * step / (1.0 + x * x + y * y).powf(1.5)
    }

    /// Continuous block position `(col, row)` of a direction, if it falls
    /// inside the frustum.
    fn project(&self, basis: &[[f64; 3]; 3], dir: &[f64; 3]) -> Option<(f64, f64)> {
        let depth = dot(&basis[0], dir);
        if depth <= 0.0 {
            return None;
        }
        let t = self.half_extent();
        let x = dot(&basis[1], dir) / depth;
        let y = dot(&basis[2], dir) / depth;
        if x.abs() > t || y.abs() > t {
            return None;
        }
        let r = self.resolution as f64;
        Some(((x / t + 1.0) * 0.5 * r - 0.5, (1.0 - y / t) * 0.5 * r - 0.5))
    }
}

/// Precomputed bilinear taps mapping block pixels onto a panorama of fixed
/// size. Reused when several panoramas share one viewport.
#[derive(Clone, Debug)]
pub struct BlockSampler {
    spec: ViewportSpec,
    width: usize,
    height: usize,
    taps: Vec<[(usize, f64); 4]>,
}

impl BlockSampler {
    pub fn new(spec: ViewportSpec, width: usize, height: usize) -> Self {
        let res = spec.resolution;
        let mut taps = Vec::with_capacity(res * res);
        for row in 0..res {
            for col in 0..res {
                let d = spec.pixel_direction(row, col);
                let c = SphereCoord::from_vector(d).expect("unit direction");
                let (x, y) = continuous_position(width, height, c.phi(), c.theta());
                taps.push(bilinear_taps(width, height, x, y));
            }
        }
        Self {
            spec,
            width,
            height,
            taps,
        }
    }

    pub fn spec(&self) -> &ViewportSpec {
        &self.spec
    }

    pub fn extract<P: Panorama + ?Sized>(&self, pano: &P) -> BlockImage {
        assert_eq!(
            (pano.width(), pano.height()),
            (self.width, self.height),
            "sampler built for a different panorama size"
        );
        let channels = pano.channels();
        let w = self.width;
        let mut pixels = Vec::with_capacity(self.taps.len() * channels);
        for taps in &self.taps {
            for ch in 0..channels {
                let v: f64 = taps
                    .iter()
                    .map(|&(i, wgt)| wgt * pano.texel(i / w, i % w, ch))
                    .sum();
                pixels.push(v as f32);
            }
        }
        BlockImage {
            spec: self.spec,
            channels,
            pixels,
        }
    }

    /// Samples a scalar map into block-domain values.
    pub fn extract_scalar(&self, map: &EquirectMap) -> Vec<f64> {
        assert!(map.width() == self.width && map.height() == self.height);
        let v = map.values();
        self.taps
            .iter()
            .map(|taps| taps.iter().map(|&(i, wgt)| wgt * v[i]).sum())
            .collect()
    }
}

/// Perspective rendering of a panorama through a viewport.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockImage {
    spec: ViewportSpec,
    channels: usize,
    pixels: Vec<f32>,
}

impl BlockImage {
    /// Wraps channel-interleaved pixel data (1 or 3 channels, 0–255 scale).
    pub fn new(spec: ViewportSpec, channels: usize, pixels: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid("block images have 1 or 3 channels"));
        }
        if pixels.len() != spec.pixel_count() * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples", spec.pixel_count() * channels),
                actual: format!("{} samples", pixels.len()),
            });
        }
        Ok(Self {
            spec,
            channels,
            pixels,
        })
    }

    pub fn spec(&self) -> &ViewportSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// Gray level per pixel using 0.299/0.587/0.114 luma weights.
    pub fn luma(&self) -> Vec<f64> {
        match self.channels {
            1 => self.pixels.iter().map(|&p| p as f64).collect(),
            _ => self
                .pixels
                .chunks_exact(3)
                .map(|c| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64)
                .collect(),
        }
    }

    /// Luma quantized to 8 bits.
    pub fn luma_u8(&self) -> Vec<u8> {
        self.luma()
            .into_iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Nonnegative per-pixel map defined on a viewport block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockFeatureMap {
    spec: ViewportSpec,
    values: Vec<f64>,
}

impl BlockFeatureMap {
    pub fn new(spec: ViewportSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.pixel_count() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", spec.pixel_count()),
                actual: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("block feature values must be finite and nonnegative"));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: ViewportSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.pixel_count()],
        }
    }

    pub fn spec(&self) -> &ViewportSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.resolution + col]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.spec.resolution, best % self.spec.resolution)
    }
}

/// Renders a viewport block from a panorama by gnomonic projection with
/// bilinear sampling.
pub fn extract_block<P: Panorama + ?Sized>(pano: &P, spec: &ViewportSpec) -> BlockImage {
    BlockSampler::new(*spec, pano.width(), pano.height()).extract(pano)
}

/// A block map carried back into the panorama.
#[derive(Clone, Debug, PartialEq)]
pub struct Reprojection {
    /// Values inside the footprint, zero elsewhere.
    pub map: EquirectMap,
    /// 1 for panorama pixels whose center falls inside the frustum, else 0.
    pub coverage: EquirectMap,
}

/// Inverse gnomonic projection of a block map onto a `width × height`
/// panorama. Every panorama pixel inside the frustum receives the bilinear
/// interpolation of the block at its projected position.
pub fn reproject_block(map: &BlockFeatureMap, width: usize, height: usize) -> Reprojection {
    let mut values = vec![0.0; width * height];
    let mut coverage = vec![0.0; width * height];
    for_each_footprint_pixel(&map.spec, width, height, |idx, x, y| {
        values[idx] = sample_block(map, x, y);
        coverage[idx] = 1.0;
    });
    Reprojection {
        map: EquirectMap::from_raw(width, height, values),
        coverage: EquirectMap::from_raw(width, height, coverage),
    }
}

/// Adds `scale ·` the reprojected block into `out`.
pub(crate) fn reproject_scaled_into(map: &BlockFeatureMap, scale: f64, width: usize, height: usize, out: &mut [f64]) {
    for_each_footprint_pixel(&map.spec, width, height, |idx, x, y| {
        out[idx] += scale * sample_block(map, x, y);
    });
}

#[inline]
fn sample_block(map: &BlockFeatureMap, x: f64, y: f64) -> f64 {
    let res = map.spec.resolution;
    let max = (res - 1) as f64;
    let x = x.clamp(0.0, max);
    let y = y.clamp(0.0, max);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as usize, y0 as usize);
    let x1 = (x0 + 1).min(res - 1);
    let y1 = (y0 + 1).min(res - 1);
    let v = &map.values;
    (1.0 - fy) * ((1.0 - fx) * v[y0 * res + x0] + fx * v[y0 * res + x1])
        + fy * ((1.0 - fx) * v[y1 * res + x0] + fx * v[y1 * res + x1])
}

/// Visits panorama pixels whose centers project inside the frustum, with
/// their continuous block coordinates `(col, row)`.
fn for_each_footprint_pixel(spec: &ViewportSpec, width: usize, height: usize, mut visit: impl FnMut(usize, f64, f64)) {
    let basis = spec.basis();
    let radius = spec.corner_radius();
    let cos_radius = (radius + 1e-9).min(PI).cos();
    let (lo, hi) = footprint_rows(spec.center.phi(), radius, height);
    for row in lo..hi {
        for col in 0..width {
            let d = pixel_center(width, height, row, col).to_unit_vector();
            if dot(&d, &basis[0]) < cos_radius {
                continue;
            }
            if let Some((x, y)) = spec.project(&basis, &d) {
                visit(row * width + col, x, y);
            }
        }
    }
}

/// Row range whose pixel centers may lie within `radius` of polar angle `phi`.
pub(crate) fn footprint_rows(phi: f64, radius: f64, height: usize) -> (usize, usize) {
    let step = PI / height as f64;
    let lo = ((phi - radius) / step - 1.0).floor().max(0.0) as usize;
    let hi = (((phi + radius) / step + 1.0).ceil() as usize).min(height);
    (lo.min(height), hi)
}
