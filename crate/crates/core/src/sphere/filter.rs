use std::f64::consts::PI;

use super::equirect::{pixel_center, pixel_solid_angle};
use super::viewport::footprint_rows;
use super::{dot, EquirectMap};
use crate::error::{Error, Result};

/// Default smoothing width, 2° of visual angle.
pub const DEFAULT_SIGMA: f64 = 2.0 * PI / 180.0;

#[derive(Clone, Copy, Debug)]
struct Tap {
    row: u32,
    col_offset: u32,
    weight: f64,
}

/// Geodesic Gaussian smoothing on an equirectangular grid.
///
/// Each output pixel is the solid-angle weighted mean of the input over the
/// cap of radius `3σ` around it, with weights `exp(−g²/2σ²)` in the geodesic
/// distance `g`. The kernel depends only on the output row, so filtering
/// commutes with whole-column rotations about the polar axis.
#[derive(Clone, Debug)]
pub struct SphericalGaussian {
    width: usize,
    height: usize,
    sigma: f64,
    taps: Vec<Vec<Tap>>,
}

impl SphericalGaussian {
    pub fn new(width: usize, height: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("smoothing sigma must be positive, got {sigma}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("filter grid must be non-empty"));
        }
        let cutoff = 3.0 * sigma;
        let cos_cutoff = cutoff.min(PI).cos();
        let inv = 1.0 / (2.0 * sigma * sigma);
        let areas: Vec<f64> = (0..height).map(|r| pixel_solid_angle(width, height, r)).collect();
        let dirs: Vec<Vec<[f64; 3]>> = (0..height)
            .map(|r| (0..width).map(|c| pixel_center(width, height, r, c).to_unit_vector()).collect())
            .collect();

        let taps = (0..height)
            .map(|out_row| {
                let center = dirs[out_row][0];
                let (lo, hi) = footprint_rows(pixel_center(width, height, out_row, 0).phi(), cutoff, height);
                let mut row_taps = Vec::new();
                for src_row in lo..hi {
                    let mut push = |dc: usize| -> bool {
                        let d = &dirs[src_row][dc];
                        if dot(&center, d) < cos_cutoff - 1e-15 {
                            return false;
                        }
                        let g = super::angle_between(&center, d);
                        if g > cutoff {
                            return false;
                        }
                        row_taps.push(Tap {
                            row: src_row as u32,
                            col_offset: dc as u32,
                            weight: (-g * g * inv).exp() * areas[src_row],
                        });
                        true
                    };
                    // distance grows monotonically with |Δθ| up to π, so
                    // walk outward in both directions until the cap ends
                    if !push(0) {
                        continue;
                    }
                    let half = width / 2;
                    let mut east_end = 0;
                    for k in 1..=half {
                        if !push(k) {
                            break;
                        }
                        east_end = k;
                    }
                    for k in 1..(width - east_end) {
                        let dc = width - k;
                        if dc <= east_end || !push(dc) {
                            break;
                        }
                    }
                }
                let total: f64 = row_taps.iter().map(|t| t.weight).sum();
                for t in &mut row_taps {
                    t.weight /= total;
                }
                row_taps
            })
            .collect();
        Ok(Self {
            width,
            height,
            sigma,
            taps,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn check_dims(&self, map: &EquirectMap) -> Result<()> {
        if map.width() != self.width || map.height() != self.height {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", map.width(), map.height()),
            });
        }
        Ok(())
    }

    #[inline]
    fn pixel(&self, input: &[f64], row: usize, col: usize) -> f64 {
        let w = self.width;
        let mut acc = 0.0;
        for t in &self.taps[row] {
            let mut c = col + t.col_offset as usize;
            if c >= w {
                c -= w;
            }
            acc += t.weight * input[t.row as usize * w + c];
        }
        acc
    }

    pub fn apply(&self, map: &EquirectMap) -> Result<EquirectMap> {
        self.check_dims(map)?;
        let input = map.values();
        let mut out = Vec::with_capacity(input.len());
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(self.pixel(input, row, col));
            }
        }
        Ok(EquirectMap::from_raw(self.width, self.height, out))
    }

    /// Filters only output pixels within `radius + 3σ` of `center`,
    /// returning the first row of the band and the band's values (full
    /// width, zero outside the cap). The caller guarantees the input is zero
    /// farther than `radius` from `center`.
    pub(crate) fn filter_cap(&self, input: &[f64], center: &[f64; 3], radius: f64) -> (usize, Vec<f64>) {
        let reach = radius + 3.0 * self.sigma + 2.0 * PI / self.height as f64;
        let cos_reach = reach.min(PI).cos();
        let phi = center[2].clamp(-1.0, 1.0).acos();
        let (lo, hi) = footprint_rows(phi, reach, self.height);
        let mut band = vec![0.0; (hi - lo) * self.width];
        for row in lo..hi {
            for col in 0..self.width {
                let d = pixel_center(self.width, self.height, row, col).to_unit_vector();
                if reach < PI && dot(&d, center) < cos_reach {
                    continue;
                }
                band[(row - lo) * self.width + col] = self.pixel(input, row, col);
            }
        }
        (lo, band)
    }
}

/// Convenience wrapper building a one-off filter.
pub fn spherical_gaussian_filter(map: &EquirectMap, sigma: f64) -> Result<EquirectMap> {
    SphericalGaussian::new(map.width(), map.height(), sigma)?.apply(map)
}
