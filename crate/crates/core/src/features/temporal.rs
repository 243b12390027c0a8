use super::blur::gaussian_blur;
use super::flow::FlowField;
use crate::error::{Error, Result};
use crate::fusion::normalize_in_place;
use crate::sphere::BlockFeatureMap;

/// Default in-plane smoothing of the flow magnitude.
pub const DEFAULT_TEMPORAL_SIGMA_PX: f64 = 5.0;

/// Gaussian-smoothed flow magnitude, normalized to `[0, 1]`.
pub fn temporal_saliency(flow: &FlowField, sigma_px: f64) -> Result<BlockFeatureMap> {
    if !(sigma_px > 0.0) {
        return Err(Error::invalid("temporal sigma must be positive"));
    }
    let res = flow.spec().resolution();
    let mut m = gaussian_blur(&flow.magnitude(), res, res, sigma_px);
    normalize_in_place(&mut m);
    BlockFeatureMap::new(*flow.spec(), m)
}
