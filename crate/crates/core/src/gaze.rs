//! Ground truth from gaze logs: saccade filtering, fixation maps, on-sphere
//! smoothing and per-video packing.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fusion::normalize_in_place;
use crate::sphere::{geodesic_distance, EquirectMap, SphereCoord, SphericalGaussian};

#[derive(Clone, Debug, PartialEq)]
pub struct GazeSample {
    pub subject_id: String,
    pub frame_index: usize,
    pub coord: SphereCoord,
}

/// One subject's samples for one video, with the subset that survived
/// saccade filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct GazeTrace {
    subject_id: String,
    samples: Vec<GazeSample>,
    kept: Vec<bool>,
    filtered: bool,
}

impl GazeTrace {
    pub fn new(samples: Vec<GazeSample>) -> Result<Self> {
        let subject_id = samples.first().map(|s| s.subject_id.clone()).unwrap_or_default();
        if samples.iter().any(|s| s.subject_id != subject_id) {
            return Err(Error::invalid("a trace holds samples of a single subject"));
        }
        if samples.windows(2).any(|w| w[1].frame_index < w[0].frame_index) {
            return Err(Error::invalid(format!("frame indices of subject '{subject_id}' decrease")));
        }
        let kept = vec![true; samples.len()];
        Ok(Self {
            subject_id,
            samples,
            kept,
            filtered: false,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    /// Every recorded sample, filtered or not.
    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    /// Whether a saccade filter has been applied.
    pub fn is_filtered(&self) -> bool {
        self.filtered
    }

    pub fn kept_mask(&self) -> &[bool] {
        &self.kept
    }

    /// Samples that survived filtering, in recording order.
    pub fn retained(&self) -> impl Iterator<Item = &GazeSample> {
        self.samples.iter().zip(&self.kept).filter(|(_, k)| **k).map(|(s, _)| s)
    }

    pub fn retained_count(&self) -> usize {
        self.kept.iter().filter(|k| **k).count()
    }
}

/// Result of [`filter_saccades`].
#[derive(Clone, Debug, PartialEq)]
pub struct SaccadeFilterOutcome {
    pub trace: GazeTrace,
    /// Set when the trace was too short to estimate step statistics and
    /// was returned unchanged.
    pub insufficient_samples: bool,
}

/// Drops samples whose step from the preceding sample lies outside
/// `mean ± 3·std` of the subject's step distances.
///
/// Step statistics always come from the full recorded sequence, so
/// filtering an already filtered trace leaves it unchanged. The first
/// sample has no step and is kept.
pub fn filter_saccades(trace: &GazeTrace) -> SaccadeFilterOutcome {
    let n = trace.samples.len();
    if n < 2 {
        log::warn!("trace of subject '{}' has {n} samples; not filtered", trace.subject_id);
        return SaccadeFilterOutcome {
            trace: trace.clone(),
            insufficient_samples: true,
        };
    }
    let steps: Vec<f64> = trace
        .samples
        .windows(2)
        .map(|w| geodesic_distance(&w[0].coord, &w[1].coord))
        .collect();
    let m = steps.len() as f64;
    let mean = steps.iter().sum::<f64>() / m;
    let std = (steps.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / m).sqrt();
    let (lo, hi) = (mean - 3.0 * std, mean + 3.0 * std);

    let mut out = trace.clone();
    for (k, d) in steps.iter().enumerate() {
        if !(lo <= *d && *d <= hi) {
            out.kept[k + 1] = false;
        }
    }
    out.filtered = true;
    SaccadeFilterOutcome {
        trace: out,
        insufficient_samples: false,
    }
}

/// Splits samples into per-subject traces ordered by frame. Subjects
/// appear in order of first occurrence; samples of equal frame keep their
/// input order.
pub fn group_traces(samples: Vec<GazeSample>) -> Result<Vec<GazeTrace>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_subject: BTreeMap<String, Vec<GazeSample>> = BTreeMap::new();
    for s in samples {
        if !by_subject.contains_key(&s.subject_id) {
            order.push(s.subject_id.clone());
        }
        by_subject.entry(s.subject_id.clone()).or_default().push(s);
    }
    order
        .into_iter()
        .map(|id| {
            let mut v = by_subject.remove(&id).unwrap_or_default();
            v.sort_by_key(|s| s.frame_index);
            GazeTrace::new(v)
        })
        .collect()
}

/// Retained fixation positions of all traces, keyed by frame.
pub fn fixations_by_frame(traces: &[GazeTrace]) -> BTreeMap<usize, Vec<SphereCoord>> {
    let mut frames: BTreeMap<usize, Vec<SphereCoord>> = BTreeMap::new();
    for t in traces {
        for s in t.retained() {
            frames.entry(s.frame_index).or_default().push(s.coord);
        }
    }
    frames
}

/// Per-pixel fixation counts on an equirectangular grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixationMap {
    width: usize,
    height: usize,
    counts: Vec<u32>,
}

impl FixationMap {
    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn from_counts(width: usize, height: usize, counts: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || counts.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} counts", width * height),
                actual: format!("{}", counts.len()),
            });
        }
        Ok(Self { width, height, counts })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.width + col]
    }

    pub fn add(&mut self, coord: &SphereCoord) {
        let (row, col) = crate::sphere::equirect_pixel_of(self.width, self.height, coord);
        self.counts[row * self.width + col] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Flat indices of pixels with at least one fixation.
    pub fn fixated_pixels(&self) -> Vec<usize> {
        (0..self.counts.len()).filter(|&i| self.counts[i] > 0).collect()
    }

    pub fn to_map(&self) -> EquirectMap {
        EquirectMap::new(self.width, self.height, self.counts.iter().map(|&c| c as f64).collect())
            .expect("counts are finite")
    }

    /// Element-wise sum of maps with equal dimensions.
    pub fn merge(&mut self, other: &FixationMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", other.width, other.height),
            });
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Ok(())
    }
}

/// Bins fixation positions into their nearest equirectangular pixel.
pub fn build_fixation_map<'a>(samples: impl IntoIterator<Item = &'a SphereCoord>, width: usize, height: usize) -> FixationMap {
    let mut m = FixationMap::empty(width, height);
    for c in samples {
        m.add(c);
    }
    m
}

/// Fixation counts smoothed on the sphere, normalized to `[0, 1]`.
pub fn ground_truth_saliency(fixations: &FixationMap, sigma: f64) -> Result<EquirectMap> {
    let filter = SphericalGaussian::new(fixations.width, fixations.height, sigma)?;
    ground_truth_with(fixations, &filter)
}

/// As [`ground_truth_saliency`] with a prebuilt filter.
pub fn ground_truth_with(fixations: &FixationMap, filter: &SphericalGaussian) -> Result<EquirectMap> {
    let mut smoothed = filter.apply(&fixations.to_map())?;
    normalize_in_place(smoothed.values_mut());
    Ok(smoothed)
}

/// `N(Σ maps)` over all frames of a video.
pub fn packed_saliency(frame_maps: &[EquirectMap]) -> Result<EquirectMap> {
    let first = frame_maps
        .first()
        .ok_or_else(|| Error::invalid("packed saliency of an empty map list"))?;
    let mut sum = vec![0.0; first.values().len()];
    for m in frame_maps {
        if !m.same_dims(first) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", first.width(), first.height()),
                actual: format!("{}x{}", m.width(), m.height()),
            });
        }
        sum.iter_mut().zip(m.values()).for_each(|(s, v)| *s += v);
    }
    normalize_in_place(&mut sum);
    EquirectMap::new(first.width(), first.height(), sum)
}
