//! Soft-decision reweighting of blocks that overlap augmented content.
//!
//! A block counts as augmented when more than a threshold fraction of its
//! pixels fall inside the augmentation mask. Its pixels split into the
//! augmented region and the surrounding environment; the gray-level entropy
//! of the augmented region sets how strongly the two regions are pushed
//! apart, and the motion difference between them sets the probabilities of
//! the complementary (attention goes to the surroundings) and adversarial
//! (attention goes to the overlay) readings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FlowField;
use crate::sphere::{BlockFeatureMap, BlockImage, BlockSampler, EquirectMap, ViewportSpec};

/// Default minimum overlap ratio (exclusive).
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.3;
/// Sampled mask values at or above this count as augmented.
pub const MASK_LEVEL: f64 = 0.5;

/// Binary per-frame mask of augmented panorama pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentationMask(EquirectMap);

impl AugmentationMask {
    pub fn new(map: EquirectMap) -> Result<Self> {
        if map.values().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("augmentation mask values must be 0 or 1"));
        }
        Ok(Self(map))
    }

    /// Marks every nonzero pixel as augmented.
    pub fn from_nonzero(map: &EquirectMap) -> Self {
        let values = map.values().iter().map(|&v| if v != 0.0 { 1.0 } else { 0.0 }).collect();
        Self(EquirectMap::new(map.width(), map.height(), values).expect("binary values are finite"))
    }

    pub fn map(&self) -> &EquirectMap {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.values().iter().all(|&v| v == 0.0)
    }
}

/// Pixel split of one augmented block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    pub block: usize,
    /// Block pixel indices inside the mask.
    pub aug_pixels: Vec<usize>,
    /// Remaining block pixel indices.
    pub env_pixels: Vec<usize>,
    pub overlap_ratio: f64,
}

/// Splits a block from its sampled mask values.
pub fn partition_from_block_mask(block: usize, mask_values: &[f64]) -> BlockPartition {
    let (aug_pixels, env_pixels): (Vec<usize>, Vec<usize>) =
        (0..mask_values.len()).partition(|&i| mask_values[i] >= MASK_LEVEL);
    let overlap_ratio = aug_pixels.len() as f64 / mask_values.len() as f64;
    BlockPartition {
        block,
        aug_pixels,
        env_pixels,
        overlap_ratio,
    }
}

/// Blocks whose overlap with the mask exceeds `threshold`.
///
/// The mask is rendered through each viewport with the same bilinear
/// sampling as the frames.
pub fn select_augmented_blocks(specs: &[ViewportSpec], mask: &AugmentationMask, threshold: f64) -> Vec<BlockPartition> {
    if mask.is_empty() {
        return Vec::new();
    }
    let m = mask.map();
    specs
        .iter()
        .enumerate()
        .filter_map(|(i, spec)| {
            let sampler = BlockSampler::new(*spec, m.width(), m.height());
            let part = partition_from_block_mask(i, &sampler.extract_scalar(m));
            (part.overlap_ratio > threshold).then_some(part)
        })
        .collect()
}

/// Shannon entropy in bits of the 8-bit luma histogram over `pixels`.
pub fn block_entropy(block: &BlockImage, pixels: &[usize]) -> Result<f64> {
    if pixels.is_empty() {
        return Err(Error::invalid("entropy of an empty pixel set"));
    }
    let luma = block.luma_u8();
    let mut hist = [0usize; 256];
    for &p in pixels {
        let level = *luma
            .get(p)
            .ok_or_else(|| Error::invalid(format!("pixel index {p} outside block")))?;
        hist[level as usize] += 1;
    }
    let n = pixels.len() as f64;
    Ok(hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// Mean flow vector over a pixel set.
pub fn mean_region_flow(flow: &FlowField, pixels: &[usize]) -> Result<[f64; 2]> {
    if pixels.is_empty() {
        return Err(Error::invalid("mean flow of an empty pixel set"));
    }
    let (u, v) = (flow.u(), flow.v());
    let mut acc = [0.0, 0.0];
    for &p in pixels {
        if p >= u.len() {
            return Err(Error::invalid(format!("pixel index {p} outside block")));
        }
        acc[0] += u[p];
        acc[1] += v[p];
    }
    let n = pixels.len() as f64;
    Ok([acc[0] / n, acc[1] / n])
}

/// Euclidean distance between two mean flows.
pub fn flow_difference(aug_mean: [f64; 2], env_mean: [f64; 2]) -> f64 {
    (aug_mean[0] - env_mean[0]).hypot(aug_mean[1] - env_mean[1])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentationType {
    /// Overlay that supports its surroundings.
    Complementary,
    /// Overlay that draws attention to itself.
    #[default]
    Adversarial,
}

impl fmt::Display for AugmentationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugmentationType::Complementary => "complementary",
            AugmentationType::Adversarial => "adversarial",
        })
    }
}

impl FromStr for AugmentationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complementary" | "c1" => Ok(AugmentationType::Complementary),
            "adversarial" | "c2" => Ok(AugmentationType::Adversarial),
            other => Err(Error::invalid(format!("unknown augmentation type '{other}'"))),
        }
    }
}

/// Which Gaussian evaluates the type likelihood.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussianForm {
    /// `exp(−(x−μ)²/2σ²)`, peak value 1.
    #[default]
    Kernel,
    /// Normal density; clamped to `[0, 1]`.
    Density,
}

/// Prior belief and per-type Gaussians mapping motion difference to type
/// probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugTypeModel {
    pub prior: AugmentationType,
    pub mu_complementary: f64,
    pub sigma_complementary: f64,
    pub mu_adversarial: f64,
    pub sigma_adversarial: f64,
    pub form: GaussianForm,
}

impl Default for AugTypeModel {
    fn default() -> Self {
        Self {
            prior: AugmentationType::default(),
            mu_complementary: 0.0,
            sigma_complementary: 0.85,
            mu_adversarial: 1.0,
            sigma_adversarial: 0.85,
            form: GaussianForm::Kernel,
        }
    }
}

impl AugTypeModel {
    pub fn with_prior(prior: AugmentationType) -> Self {
        Self {
            prior,
            ..Self::default()
        }
    }

    fn gaussian(&self, x: f64, mu: f64, sigma: f64) -> f64 {
        let k = (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp();
        match self.form {
            GaussianForm::Kernel => k,
            GaussianForm::Density => (k / (sigma * (2.0 * std::f64::consts::PI).sqrt())).min(1.0),
        }
    }
}

/// Probabilities `(p_complementary, p_adversarial)` for a motion difference.
pub fn augmentation_probability(delta_f: f64, model: &AugTypeModel) -> Result<(f64, f64)> {
    if !(delta_f >= 0.0) {
        return Err(Error::invalid(format!("motion difference must be nonnegative, got {delta_f}")));
    }
    if !(model.sigma_complementary > 0.0 && model.sigma_adversarial > 0.0) {
        return Err(Error::invalid("type model sigmas must be positive"));
    }
    let x = delta_f.tanh();
    Ok(match model.prior {
        AugmentationType::Complementary => {
            let p1 = model.gaussian(x, model.mu_complementary, model.sigma_complementary);
            (p1, 1.0 - p1)
        }
        AugmentationType::Adversarial => {
            let p2 = model.gaussian(x, model.mu_adversarial, model.sigma_adversarial);
            (1.0 - p2, p2)
        }
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weights `(w_a, w_e)` for the augmented and environment regions.
///
/// `w_a` is the expectation of `2·sigmoid(K·H)` with `K = −1` for the
/// complementary type and `K = +1` for the adversarial type; `w_e = 2 − w_a`.
pub fn augmentation_weights(entropy_bits: f64, p_complementary: f64, p_adversarial: f64) -> (f64, f64) {
    let w_a = p_complementary * 2.0 * sigmoid(-entropy_bits) + p_adversarial * 2.0 * sigmoid(entropy_bits);
    (w_a, 2.0 - w_a)
}

/// Scales augmented pixels by `w_a` and environment pixels by `w_e`.
pub fn apply_spatial_weighting(map: &BlockFeatureMap, part: &BlockPartition, w_a: f64, w_e: f64) -> Result<BlockFeatureMap> {
    let mut values = map.values().to_vec();
    for &p in &part.aug_pixels {
        values[p] *= w_a;
    }
    for &p in &part.env_pixels {
        values[p] *= w_e;
    }
    BlockFeatureMap::new(*map.spec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SphereCoord;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spec(res: usize) -> ViewportSpec {
        ViewportSpec::new(SphereCoord::new(PI / 2.0, 1.0).unwrap(), PI / 3.0, res).unwrap()
    }

    #[test]
    fn full_and_empty_masks() {
        let specs: Vec<_> = crate::sphere::generate_targets(12)
            .unwrap()
            .into_iter()
            .map(|c| ViewportSpec::new(c, PI / 3.0, 16).unwrap())
            .collect();
        let full = AugmentationMask::new(EquirectMap::from_fn(64, 32, |_| 1.0)).unwrap();
        let sel = select_augmented_blocks(&specs, &full, DEFAULT_OVERLAP_THRESHOLD);
        assert_eq!(sel.len(), 12);
        assert!(sel.iter().all(|p| p.overlap_ratio == 1.0 && p.env_pixels.is_empty()));
        let empty = AugmentationMask::new(EquirectMap::zeros(64, 32)).unwrap();
        assert!(select_augmented_blocks(&specs, &empty, DEFAULT_OVERLAP_THRESHOLD).is_empty());
    }

    #[test]
    fn exact_threshold_excluded() {
        let mut values = vec![0.0; 100];
        values[..30].iter_mut().for_each(|v| *v = 1.0);
        let part = partition_from_block_mask(0, &values);
        assert_eq!(part.overlap_ratio, 0.3);
        assert!(!(part.overlap_ratio > DEFAULT_OVERLAP_THRESHOLD));
        values[30] = 0.5;
        assert!(partition_from_block_mask(0, &values).overlap_ratio > DEFAULT_OVERLAP_THRESHOLD);
    }

    #[test]
    fn partition_covers_block_disjointly() {
        let values: Vec<f64> = (0..64).map(|i| (i % 7) as f64 / 6.0).collect();
        let p = partition_from_block_mask(3, &values);
        let mut all: Vec<usize> = p.aug_pixels.iter().chain(&p.env_pixels).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..64).collect::<Vec<_>>());
        assert_eq!(p.overlap_ratio, p.aug_pixels.len() as f64 / 64.0);
    }

    #[test]
    fn mask_validation() {
        assert!(AugmentationMask::new(EquirectMap::new(2, 1, vec![0.0, 0.5]).unwrap()).is_err());
        let m = AugmentationMask::from_nonzero(&EquirectMap::new(2, 1, vec![0.0, 0.5]).unwrap());
        assert_eq!(m.map().values(), &[0.0, 1.0]);
    }

    #[test]
    fn entropy_examples() {
        let b = BlockImage::new(spec(16), 1, (0..256).map(|i| i as f32).collect()).unwrap();
        let all: Vec<usize> = (0..256).collect();
        assert_eq!(block_entropy(&b, &all).unwrap(), 8.0);
        assert_eq!(block_entropy(&b, &[5, 5, 5]).unwrap(), 0.0);
        assert_abs_diff_eq!(block_entropy(&b, &[1, 2]).unwrap(), 1.0, epsilon = 1e-15);
        assert!(block_entropy(&b, &[]).is_err());
    }

    #[test]
    fn mean_flow_examples() {
        let s = spec(4);
        let f = FlowField::new(s, vec![1.0; 16], vec![0.0; 16]).unwrap();
        assert_eq!(mean_region_flow(&f, &[0, 5, 9]).unwrap(), [1.0, 0.0]);
        let u: Vec<f64> = (0..16).map(|i| if i % 4 < 2 { 1.5 } else { -1.5 }).collect();
        let f = FlowField::new(s, u.clone(), u).unwrap();
        assert_eq!(mean_region_flow(&f, &(0..16).collect::<Vec<_>>()).unwrap(), [0.0, 0.0]);
        assert!(mean_region_flow(&f, &[]).is_err());
    }

    #[test]
    fn flow_difference_examples() {
        assert_eq!(flow_difference([0.3, -2.0], [0.3, -2.0]), 0.0);
        assert_eq!(flow_difference([1.0, 0.0], [0.0, 0.0]), 1.0);
        assert_eq!(flow_difference([3.0, 4.0], [0.0, 0.0]), 5.0);
    }

    #[test]
    fn probability_examples() {
        let c1 = AugTypeModel::with_prior(AugmentationType::Complementary);
        let c2 = AugTypeModel::with_prior(AugmentationType::Adversarial);
        assert_eq!(augmentation_probability(0.0, &c1).unwrap(), (1.0, 0.0));
        let edge = (-1.0 / (2.0 * 0.85 * 0.85f64)).exp();
        assert_abs_diff_eq!(edge, 0.5006, epsilon = 1e-4);
        let (p1, _) = augmentation_probability(1e6, &c1).unwrap();
        assert_abs_diff_eq!(p1, edge, epsilon = 1e-15);
        let (p1, p2) = augmentation_probability(0.0, &c2).unwrap();
        assert_abs_diff_eq!(p2, edge, epsilon = 1e-15);
        assert_abs_diff_eq!(p1, 1.0 - edge, epsilon = 1e-15);
        assert!(augmentation_probability(-0.1, &c2).is_err());

        let dens = AugTypeModel { form: GaussianForm::Density, ..c1 };
        let (p1, p2) = augmentation_probability(0.0, &dens).unwrap();
        assert_abs_diff_eq!(p1, 1.0 / (0.85 * (2.0 * PI).sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(p1 + p2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(augmentation_weights(0.0, 0.3, 0.7), (1.0, 1.0));
        let s8 = 1.0 / (1.0 + (-8.0f64).exp());
        let (wa, we) = augmentation_weights(8.0, 0.0, 1.0);
        assert_abs_diff_eq!(wa, 2.0 * s8, epsilon = 1e-15);
        assert_abs_diff_eq!(wa, 1.99933, epsilon = 1e-5);
        assert_abs_diff_eq!(we, 0.00067, epsilon = 1e-5);
        let (wa, we) = augmentation_weights(8.0, 1.0, 0.0);
        assert_abs_diff_eq!(wa, 0.00067, epsilon = 1e-5);
        assert_abs_diff_eq!(we, 1.99933, epsilon = 1e-5);
    }

    #[test]
    fn weighting_examples() {
        let s = spec(4);
        let map = BlockFeatureMap::new(s, (0..16).map(|i| i as f64 / 15.0).collect()).unwrap();
        let part = partition_from_block_mask(0, &(0..16).map(|i| (i % 3 == 0) as u8 as f64).collect::<Vec<_>>());
        assert_eq!(apply_spatial_weighting(&map, &part, 1.0, 1.0).unwrap(), map);
        let all_aug = partition_from_block_mask(0, &[1.0; 16]);
        let doubled = apply_spatial_weighting(&map, &all_aug, 2.0, 0.0).unwrap();
        assert!(doubled.values().iter().zip(map.values()).all(|(d, m)| *d == 2.0 * m));

        let (wa, we) = (1.37, 0.63);
        let out = apply_spatial_weighting(&map, &part, wa, we).unwrap();
        let mass = |idx: &[usize], v: &[f64]| idx.iter().map(|&i| v[i]).sum::<f64>();
        let expected = wa * mass(&part.aug_pixels, map.values()) + we * mass(&part.env_pixels, map.values());
        let got = mass(&part.aug_pixels, out.values()) + mass(&part.env_pixels, out.values());
        assert_abs_diff_eq!(got, expected, epsilon = 1e-14);
    }
}
