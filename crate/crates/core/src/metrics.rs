//! Saliency evaluation metrics on equirectangular maps.
//!
//! Pixel statistics are weighted by `sin(phi)` at the pixel center unless
//! [`AreaWeighting::Uniform`] is selected.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::normalize_in_place;
use crate::gaze::{ground_truth_with, FixationMap};
use crate::sphere::{EquirectMap, SphericalGaussian};

/// Regularizer added to every bin before the KL divergence.
pub const KL_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AreaWeighting {
    #[default]
    SinPhi,
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KlDirection {
    /// `KL(gt ‖ pred)`.
    #[default]
    GroundTruthFirst,
    /// `KL(pred ‖ gt)`.
    PredictionFirst,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MetricOptions {
    pub weighting: AreaWeighting,
    pub kl_direction: KlDirection,
}

/// Per-pixel weights of a `width × height` grid.
pub fn pixel_weights(width: usize, height: usize, weighting: AreaWeighting) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        let w = match weighting {
            AreaWeighting::SinPhi => (std::f64::consts::PI * (row as f64 + 0.5) / height as f64).sin(),
            AreaWeighting::Uniform => 1.0,
        };
        out.extend(std::iter::repeat_n(w, width));
    }
    out
}

fn check_dims(pred: &EquirectMap, width: usize, height: usize) -> Result<()> {
    if pred.width() != width || pred.height() != height {
        return Err(Error::DimensionMismatch {
            expected: format!("{width}x{height}"),
            actual: format!("{}x{}", pred.width(), pred.height()),
        });
    }
    Ok(())
}

fn check_fixations(pred: &EquirectMap, fix: &FixationMap) -> Result<()> {
    check_dims(pred, fix.width(), fix.height())?;
    if fix.total() == 0 {
        return Err(Error::invalid("metric needs at least one fixation"));
    }
    Ok(())
}

/// Weighted mean and standard deviation.
fn weighted_moments(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total;
    (mean, var.max(0.0).sqrt())
}

fn is_degenerate(std: f64, mean: f64) -> bool {
    !(std > 1e-12 * mean.abs().max(1.0))
}

pub fn auc_judd(pred: &EquirectMap, fix: &FixationMap) -> Result<f64> {
    auc_judd_with(pred, fix, AreaWeighting::default())
}

/// ROC area with thresholds at the predicted values of fixated pixels.
///
/// True positives are counted over fixated pixels, false positives over the
/// remaining pixels weighted by area.
pub fn auc_judd_with(pred: &EquirectMap, fix: &FixationMap, weighting: AreaWeighting) -> Result<f64> {
    check_fixations(pred, fix)?;
    let weights = pixel_weights(pred.width(), pred.height(), weighting);
    let values = pred.values();

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (i, &c) in fix.counts().iter().enumerate() {
        if c > 0 {
            positives.push(values[i]);
        } else {
            negatives.push((values[i], weights[i]));
        }
    }
    positives.sort_by(|a, b| b.total_cmp(a));
    negatives.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cumulative = Vec::with_capacity(negatives.len());
    let mut acc = 0.0;
    for (_, w) in &negatives {
        acc += w;
        cumulative.push(acc);
    }
    let neg_total = acc;
    let n_pos = positives.len() as f64;

    let mut area = 0.0;
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut k = 0;
    while k < positives.len() {
        let t = positives[k];
        while k < positives.len() && positives[k] == t {
            k += 1;
        }
        let tpr = k as f64 / n_pos;
        let above = negatives.partition_point(|(v, _)| *v >= t);
        let fpr = if above == 0 || neg_total == 0.0 {
            0.0
        } else {
            cumulative[above - 1] / neg_total
        };
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
    Ok(area)
}

pub fn nss(pred: &EquirectMap, fix: &FixationMap) -> Result<f64> {
    nss_with(pred, fix, AreaWeighting::default())
}

/// Mean standardized prediction at fixations, weighted by fixation count.
pub fn nss_with(pred: &EquirectMap, fix: &FixationMap, weighting: AreaWeighting) -> Result<f64> {
    check_fixations(pred, fix)?;
    let weights = pixel_weights(pred.width(), pred.height(), weighting);
    let (mean, std) = weighted_moments(pred.values(), &weights);
    if is_degenerate(std, mean) {
        return Err(Error::Undefined("NSS of a constant prediction".into()));
    }
    let mut sum = 0.0;
    for (v, &c) in pred.values().iter().zip(fix.counts()) {
        if c > 0 {
            sum += c as f64 * (v - mean) / std;
        }
    }
    Ok(sum / fix.total() as f64)
}

fn to_distribution(map: &EquirectMap, weights: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = map.values().iter().zip(weights).map(|(v, w)| v.max(0.0) * w).collect();
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|x| *x /= total);
    }
    p.iter_mut().for_each(|x| *x += KL_EPSILON);
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

pub fn kl_divergence(pred: &EquirectMap, gt: &EquirectMap) -> Result<f64> {
    kl_divergence_with(pred, gt, &MetricOptions::default())
}

/// KL divergence in nats between the area-weighted distributions of the
/// two maps.
pub fn kl_divergence_with(pred: &EquirectMap, gt: &EquirectMap, opts: &MetricOptions) -> Result<f64> {
    check_dims(pred, gt.width(), gt.height())?;
    let weights = pixel_weights(gt.width(), gt.height(), opts.weighting);
    let p = to_distribution(pred, &weights);
    let q = to_distribution(gt, &weights);
    let (reference, model) = match opts.kl_direction {
        KlDirection::GroundTruthFirst => (&q, &p),
        KlDirection::PredictionFirst => (&p, &q),
    };
    let kl: f64 = reference.iter().zip(model.iter()).map(|(r, m)| r * (r / m).ln()).sum();
    Ok(kl.max(0.0))
}

pub fn cc(pred: &EquirectMap, gt: &EquirectMap) -> Result<f64> {
    cc_with(pred, gt, AreaWeighting::default())
}

/// Pearson correlation with area-weighted moments.
pub fn cc_with(pred: &EquirectMap, gt: &EquirectMap, weighting: AreaWeighting) -> Result<f64> {
    check_dims(pred, gt.width(), gt.height())?;
    let weights = pixel_weights(gt.width(), gt.height(), weighting);
    let (ma, sa) = weighted_moments(pred.values(), &weights);
    let (mb, sb) = weighted_moments(gt.values(), &weights);
    if is_degenerate(sa, ma) || is_degenerate(sb, mb) {
        return Err(Error::Undefined("correlation with a constant map".into()));
    }
    let total: f64 = weights.iter().sum();
    let cov = pred
        .values()
        .iter()
        .zip(gt.values())
        .zip(&weights)
        .map(|((a, b), w)| w * (a - ma) * (b - mb))
        .sum::<f64>()
        / total;
    Ok((cov / (sa * sb)).clamp(-1.0, 1.0))
}

/// The four metric values of one frame or of packed maps. Undefined metrics
/// are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub auc_judd: f64,
    pub nss: f64,
    pub kl: f64,
    pub cc: f64,
}

impl Scores {
    fn as_array(&self) -> [f64; 4] {
        [self.auc_judd, self.nss, self.kl, self.cc]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            auc_judd: a[0],
            nss: a[1],
            kl: a[2],
            cc: a[3],
        }
    }
}

fn value_or_nan(r: Result<f64>, name: &str) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Undefined(msg)) => {
            log::warn!("{name} undefined: {msg}");
            Ok(f64::NAN)
        }
        Err(e) => Err(e),
    }
}

/// Scores a prediction against fixations and their smoothed ground truth.
pub fn score(pred: &EquirectMap, fix: &FixationMap, gt: &EquirectMap, opts: &MetricOptions) -> Result<Scores> {
    Ok(Scores {
        auc_judd: auc_judd_with(pred, fix, opts.weighting)?,
        nss: value_or_nan(nss_with(pred, fix, opts.weighting), "NSS")?,
        kl: kl_divergence_with(pred, gt, opts)?,
        cc: value_or_nan(cc_with(pred, gt, opts.weighting), "CC")?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameScores {
    pub frame_index: usize,
    pub scores: Scores,
}

/// Per-frame scores with their mean, standard deviation and the scores of
/// the packed maps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub frames: Vec<FrameScores>,
    pub mean: Scores,
    pub std: Scores,
    pub packed: Scores,
}

/// One evaluated frame.
pub struct EvaluationFrame<'a> {
    pub frame_index: usize,
    pub prediction: &'a EquirectMap,
    pub fixations: &'a FixationMap,
}

/// Evaluates frames in parallel; ground truth is the fixation map smoothed
/// with `filter`. Frames without fixations are skipped.
pub fn evaluate(frames: &[EvaluationFrame<'_>], filter: &SphericalGaussian, opts: &MetricOptions) -> Result<EvaluationReport> {
    let frames: Vec<&EvaluationFrame<'_>> = frames.iter().filter(|f| f.fixations.total() > 0).collect();
    if frames.is_empty() {
        return Err(Error::invalid("no frame has fixations"));
    }
    let mut rows: Vec<FrameScores> = frames
        .par_iter()
        .map(|f| {
            let gt = ground_truth_with(f.fixations, filter)?;
            let scores = score(f.prediction, f.fixations, &gt, opts)?;
            Ok(FrameScores {
                frame_index: f.frame_index,
                scores,
            })
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e)?;
    rows.sort_by_key(|r| r.frame_index);

    let mut mean = [0.0; 4];
    let mut std = [0.0; 4];
    for k in 0..4 {
        let vals: Vec<f64> = rows.iter().map(|r| r.scores.as_array()[k]).filter(|v| v.is_finite()).collect();
        if vals.is_empty() {
            mean[k] = f64::NAN;
            std[k] = f64::NAN;
            continue;
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        mean[k] = m;
        std[k] = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    }

    let first = frames[0];
    let mut packed_pred = vec![0.0; first.prediction.values().len()];
    let mut packed_fix = FixationMap::empty(first.fixations.width(), first.fixations.height());
    for f in &frames {
        check_dims(f.prediction, first.prediction.width(), first.prediction.height())?;
        packed_pred.iter_mut().zip(f.prediction.values()).for_each(|(a, b)| *a += b);
        packed_fix.merge(f.fixations)?;
    }
    normalize_in_place(&mut packed_pred);
    let packed_pred = EquirectMap::new(first.prediction.width(), first.prediction.height(), packed_pred)?;
    let packed_gt = ground_truth_with(&packed_fix, filter)?;
    let packed = score(&packed_pred, &packed_fix, &packed_gt, opts)?;

    Ok(EvaluationReport {
        frames: rows,
        mean: Scores::from_array(mean),
        std: Scores::from_array(std),
        packed,
    })
}

impl EvaluationReport {
    /// CSV with one row per frame followed by `mean`, `std` and `all` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,auc_judd,nss,kl,cc\n");
        let mut line = |label: String, s: &Scores| {
            let [a, n, k, c] = s.as_array();
            out.push_str(&format!("{label},{a},{n},{k},{c}\n"));
        };
        for r in &self.frames {
            line(r.frame_index.to_string(), &r.scores);
        }
        line("mean".into(), &self.mean);
        line("std".into(), &self.std);
        line("all".into(), &self.packed);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze::build_fixation_map;
    use crate::sphere::SphereCoord;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> EquirectMap {
        EquirectMap::new(w, h, (0..w * h).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    fn random_fixations(rng: &mut ChaCha8Rng, w: usize, h: usize, n: usize) -> FixationMap {
        let pts: Vec<SphereCoord> = (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                SphereCoord::new(z.acos(), rng.gen_range(0.0..std::f64::consts::TAU)).unwrap()
            })
            .collect();
        build_fixation_map(&pts, w, h)
    }

    #[test]
    fn zero_fixations_rejected() {
        let m = EquirectMap::zeros(8, 4);
        let f = FixationMap::empty(8, 4);
        assert!(auc_judd(&m, &f).is_err());
        assert!(nss(&m, &f).is_err());
    }

    #[test]
    fn perfect_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = EquirectMap::new(32, 16, (0..512).map(|_| rng.gen::<f64>() * 0.5).collect()).unwrap();
        let mut counts = vec![0; 512];
        for i in [3, 77, 200, 301] {
            counts[i] = 2;
            m.values_mut()[i] = 0.9 + i as f64 * 1e-4;
        }
        let f = FixationMap::from_counts(32, 16, counts).unwrap();
        assert_eq!(auc_judd(&m, &f).unwrap(), 1.0);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_map(&mut rng, 32, 16);
        let f = random_fixations(&mut rng, 32, 16, 30);
        let t = EquirectMap::new(32, 16, m.values().iter().map(|v| (3.0 * v).exp() - 0.2).collect()).unwrap();
        assert_eq!(auc_judd(&m, &f).unwrap(), auc_judd(&t, &f).unwrap());
    }

    #[test]
    fn nss_affine_invariant_and_constant_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_map(&mut rng, 32, 16);
        let f = random_fixations(&mut rng, 32, 16, 30);
        let t = EquirectMap::new(32, 16, m.values().iter().map(|v| 4.0 * v + 7.0).collect()).unwrap();
        assert_abs_diff_eq!(nss(&m, &f).unwrap(), nss(&t, &f).unwrap(), epsilon = 1e-9);
        let c = EquirectMap::new(32, 16, vec![0.4; 512]).unwrap();
        assert!(matches!(nss(&c, &f), Err(Error::Undefined(_))));
    }

    #[test]
    fn kl_and_cc_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_map(&mut rng, 32, 16);
        let b = random_map(&mut rng, 32, 16);
        assert!(kl_divergence(&a, &a).unwrap() < 1e-9);
        assert!(kl_divergence(&a, &b).unwrap() > 0.0);
        assert_abs_diff_eq!(cc(&a, &a).unwrap(), 1.0, epsilon = 1e-9);
        let neg = EquirectMap::new(32, 16, a.values().iter().map(|v| a.max() - v).collect()).unwrap();
        assert_abs_diff_eq!(cc(&a, &neg).unwrap(), -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cc(&a, &b).unwrap(), cc(&b, &a).unwrap(), epsilon = 1e-15);
        let c = EquirectMap::new(32, 16, vec![1.0; 512]).unwrap();
        assert!(cc(&a, &c).is_err());
    }

    #[test]
    fn kl_direction_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_map(&mut rng, 16, 8);
        let b = random_map(&mut rng, 16, 8);
        let rev = MetricOptions {
            kl_direction: KlDirection::PredictionFirst,
            ..Default::default()
        };
        assert_abs_diff_eq!(
            kl_divergence_with(&a, &b, &rev).unwrap(),
            kl_divergence(&b, &a).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn equatorial_band_cc_matches_unweighted() {
        // a single-row grid lies on the equator, where sin(phi) is constant
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_map(&mut rng, 256, 1);
        let b = random_map(&mut rng, 256, 1);
        let weighted = cc(&a, &b).unwrap();
        let plain = cc_with(&a, &b, AreaWeighting::Uniform).unwrap();
        assert!((weighted - plain).abs() < 1e-6);
    }

    #[test]
    fn report_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let preds: Vec<EquirectMap> = (0..3).map(|_| random_map(&mut rng, 32, 16)).collect();
        let fixes: Vec<FixationMap> = (0..3).map(|_| random_fixations(&mut rng, 32, 16, 20)).collect();
        let frames: Vec<EvaluationFrame<'_>> = (0..3)
            .map(|i| EvaluationFrame {
                frame_index: 10 - 5 * i,
                prediction: &preds[i],
                fixations: &fixes[i],
            })
            .collect();
        let filter = SphericalGaussian::new(32, 16, 0.1).unwrap();
        let report = evaluate(&frames, &filter, &MetricOptions::default()).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "frame_index,auc_judd,nss,kl,cc");
        assert!(lines[1].starts_with("0,"));
        assert!(lines[3].starts_with("10,"));
        assert!(lines[4].starts_with("mean,") && lines[5].starts_with("std,") && lines[6].starts_with("all,"));
        let m = report.frames.iter().map(|r| r.scores.auc_judd).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(report.mean.auc_judd, m, epsilon = 1e-15);
    }
}
