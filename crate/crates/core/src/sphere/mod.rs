//! Geometry on the unit sphere: coordinates, target lattices, equirectangular
//! maps, perspective viewport blocks and on-sphere smoothing.

mod equirect;
mod filter;
mod viewport;

use std::f64::consts::{PI, TAU};

pub use equirect::{EquirectMap, Frame, Panorama};
pub(crate) use equirect::pixel_of as equirect_pixel_of;
pub use filter::{spherical_gaussian_filter, SphericalGaussian, DEFAULT_SIGMA};
pub(crate) use viewport::reproject_scaled_into as viewport_reproject_scaled_into;
pub use viewport::{
    extract_block, reproject_block, BlockFeatureMap, BlockImage, BlockSampler, Reprojection,
    ViewportSpec,
};

use crate::error::{Error, Result};

/// Golden ratio.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Azimuth increment between consecutive lattice points, `2π(1 − 1/GR)`.
pub fn golden_angle() -> f64 {
    TAU * (1.0 - 1.0 / GOLDEN_RATIO)
}

/// Position on the unit sphere.
///
/// `phi` is the polar angle measured from the north pole (`phi = 0`) and
/// `theta` the azimuth, kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereCoord {
    phi: f64,
    theta: f64,
}

impl SphereCoord {
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if !phi.is_finite() || !theta.is_finite() {
            return Err(Error::invalid("sphere coordinates must be finite"));
        }
        if !(0.0..=PI).contains(&phi) {
            return Err(Error::invalid(format!("polar angle {phi} outside [0, π]")));
        }
        Ok(Self {
            phi,
            theta: normalize_azimuth(theta),
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Cartesian unit vector with `z` toward the north pole.
    pub fn to_unit_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        [sp * ct, sp * st, cp]
    }

    /// Direction of a nonzero vector. The vector need not be normalized.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let rho = v[0].hypot(v[1]);
        if rho == 0.0 && v[2] == 0.0 || !(rho.is_finite() && v[2].is_finite()) {
            return Err(Error::invalid("cannot take the direction of a zero vector"));
        }
        let phi = rho.atan2(v[2]);
        let theta = v[1].atan2(v[0]);
        Ok(Self {
            phi,
            theta: normalize_azimuth(theta),
        })
    }
}

/// Wraps an azimuth into `[0, 2π)`.
pub fn normalize_azimuth(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Whether the lattice keeps the literal index range `i = 1..=n`, whose
/// last point sits exactly on the south pole.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PoleHandling {
    #[default]
    Include,
    /// Uses half-integer indices `i − ½`, which never lands on a pole.
    Skip,
}

/// Fibonacci lattice of `n` evenly distributed target points.
pub fn generate_targets(n: usize) -> Result<Vec<SphereCoord>> {
    generate_targets_with(n, PoleHandling::Include)
}

pub fn generate_targets_with(n: usize, poles: PoleHandling) -> Result<Vec<SphereCoord>> {
    if n == 0 {
        return Err(Error::invalid("target count must be at least 1"));
    }
    let gamma = golden_angle();
    let nf = n as f64;
    Ok((1..=n)
        .map(|i| {
            let idx = match poles {
                PoleHandling::Include => i as f64,
                PoleHandling::Skip => i as f64 - 0.5,
            };
            let z = (1.0 - 2.0 * idx / nf).clamp(-1.0, 1.0);
            SphereCoord {
                phi: z.acos(),
                theta: normalize_azimuth(i as f64 * gamma),
            }
        })
        .collect())
}

/// Great-circle distance in radians.
pub fn geodesic_distance(a: &SphereCoord, b: &SphereCoord) -> f64 {
    angle_between(&a.to_unit_vector(), &b.to_unit_vector())
}

pub(crate) fn angle_between(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = cross(a, b);
    let s = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    s.atan2(dot(a, b))
}

#[inline]
pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
