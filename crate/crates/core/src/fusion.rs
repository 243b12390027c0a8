//! Linear normalization and spatio-temporal fusion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rescales values linearly onto `[0, 1]` in place.
///
/// Maps whose spread is within a few ulps of their magnitude are treated as
/// constant and become all zeros.
pub fn normalize_in_place(values: &mut [f64]) {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    let scale = min.abs().max(max.abs());
    if values.is_empty() || !(range > 64.0 * f64::EPSILON * scale) {
        values.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    for v in values.iter_mut() {
        *v = (*v - min) / range;
    }
}

/// Normalization operator `N`: `(v − min) / (max − min)`, constant maps to
/// zero.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    normalize_in_place(&mut out);
    out
}

/// Pixel-wise combination applied after normalizing both inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionStrategy {
    Product,
    Max,
    #[default]
    Sum,
}

impl FusionStrategy {
    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FusionStrategy::Product => a * b,
            FusionStrategy::Max => a.max(b),
            FusionStrategy::Sum => a + b,
        }
    }
}

impl fmt::Display for FusionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionStrategy::Product => "product",
            FusionStrategy::Max => "max",
            FusionStrategy::Sum => "sum",
        })
    }
}

impl FromStr for FusionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(FusionStrategy::Product),
            "max" => Ok(FusionStrategy::Max),
            "sum" => Ok(FusionStrategy::Sum),
            other => Err(Error::invalid(format!("unknown fusion strategy '{other}'"))),
        }
    }
}

/// `N(op(N(spatial), N(temporal)))`.
pub fn fuse(spatial: &[f64], temporal: &[f64], strategy: FusionStrategy) -> Result<Vec<f64>> {
    if spatial.len() != temporal.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} values", spatial.len()),
            actual: format!("{} values", temporal.len()),
        });
    }
    let s = normalize(spatial);
    let t = normalize(temporal);
    let mut out: Vec<f64> = s.iter().zip(&t).map(|(a, b)| strategy.combine(*a, *b)).collect();
    normalize_in_place(&mut out);
    Ok(out)
}
