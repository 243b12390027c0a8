//! End-to-end prediction: blocks, features, augmentation weighting, graph
//! weighting and rearrangement, per frame and over sampled videos.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmentation::{
    augmentation_probability, augmentation_weights, apply_spatial_weighting, block_entropy, flow_difference,
    mean_region_flow, partition_from_block_mask, AugTypeModel, AugmentationMask, DEFAULT_OVERLAP_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::features::{
    load_external_flow, load_external_spatial, optical_flow, spatial_saliency, temporal_saliency, FeatureSource,
    FlowField, FlowParams, DEFAULT_TEMPORAL_SIGMA_PX,
};
use crate::fusion::{fuse, FusionStrategy};
use crate::gaze::FixationMap;
use crate::graph::{
    build_graph, equilibrium, rearrange, EquilibriumWeights, GraphParams, SmoothingMode, TransitionGraph,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use crate::metrics::{evaluate, EvaluationFrame, EvaluationReport, MetricOptions};
use crate::sphere::{
    generate_targets, BlockFeatureMap, BlockSampler, EquirectMap, Frame, SphereCoord, SphericalGaussian, ViewportSpec,
    DEFAULT_SIGMA,
};

/// Which earlier frame the flow of a sampled frame is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowPairing {
    /// The previous sampled frame, `t − stride`.
    #[default]
    SampledFrames,
    /// The previous original frame, `t − 1`.
    AdjacentFrames,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_targets: usize,
    pub fov: f64,
    pub block_resolution: usize,
    pub frame_stride: usize,
    pub fusion: FusionStrategy,
    pub aug_model: AugTypeModel,
    pub overlap_threshold: f64,
    pub graph: GraphParams,
    pub temporal_sigma_px: f64,
    /// Smoothing of the rearranged panorama, radians.
    pub rearrange_sigma: f64,
    /// Smoothing of fixation maps into ground truth, radians.
    pub gt_sigma: f64,
    pub flow: FlowParams,
    pub flow_pairing: FlowPairing,
    pub spatial_source: FeatureSource,
    pub flow_source: FeatureSource,
    /// Augmentation weighting of blocks overlapping the mask.
    pub enable_f4: bool,
    /// Equilibrium weighting of blocks; uniform weights when off.
    pub enable_f5: bool,
    pub smoothing: SmoothingMode,
    pub equilibrium_tolerance: f64,
    pub equilibrium_max_iterations: usize,
    pub diagnostics: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_targets: 64,
            fov: PI / 3.0,
            block_resolution: 224,
            frame_stride: 5,
            fusion: FusionStrategy::default(),
            aug_model: AugTypeModel::default(),
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            graph: GraphParams::default(),
            temporal_sigma_px: DEFAULT_TEMPORAL_SIGMA_PX,
            rearrange_sigma: DEFAULT_SIGMA,
            gt_sigma: DEFAULT_SIGMA,
            flow: FlowParams::default(),
            flow_pairing: FlowPairing::default(),
            spatial_source: FeatureSource::BuiltinSpatial,
            flow_source: FeatureSource::BuiltinFlow,
            enable_f4: true,
            enable_f5: true,
            smoothing: SmoothingMode::default(),
            equilibrium_tolerance: DEFAULT_TOLERANCE,
            equilibrium_max_iterations: DEFAULT_MAX_ITERATIONS,
            diagnostics: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let angle = |name: &str, v: f64| {
            if v > 0.0 && v <= PI {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in (0, π], got {v}")))
            }
        };
        if self.n_targets == 0 {
            return Err(Error::invalid("n_targets must be positive"));
        }
        if !(self.fov > 0.0 && self.fov < PI) {
            return Err(Error::invalid(format!("fov must lie in (0, π), got {}", self.fov)));
        }
        if self.block_resolution < 2 {
            return Err(Error::invalid("block_resolution must be at least 2"));
        }
        if self.frame_stride == 0 {
            return Err(Error::invalid("frame_stride must be at least 1"));
        }
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "overlap_threshold must lie in (0, 1), got {}",
                self.overlap_threshold
            )));
        }
        angle("phi_delta", self.graph.phi_delta)?;
        angle("theta_delta", self.graph.theta_delta)?;
        angle("sigma_dist", self.graph.sigma_dist)?;
        angle("rearrange_sigma", self.rearrange_sigma)?;
        angle("gt_sigma", self.gt_sigma)?;
        if !(self.temporal_sigma_px > 0.0) {
            return Err(Error::invalid("temporal_sigma_px must be positive"));
        }
        if !(self.flow.smoothness > 0.0) || self.flow.max_iterations == 0 {
            return Err(Error::invalid("flow smoothness and iteration budget must be positive"));
        }
        Ok(())
    }

    pub fn viewports(&self) -> Result<Vec<ViewportSpec>> {
        generate_targets(self.n_targets)?
            .into_iter()
            .map(|c| ViewportSpec::new(c, self.fov, self.block_resolution))
            .collect()
    }
}

/// Per-block quantities recorded when diagnostics are enabled.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockDiagnostics {
    pub block: usize,
    pub phi: f64,
    pub theta: f64,
    pub mean: f64,
    pub alpha: f64,
    pub overlap: Option<f64>,
    pub entropy: Option<f64>,
    pub flow_difference: Option<f64>,
    pub p_complementary: Option<f64>,
    pub p_adversarial: Option<f64>,
    pub w_a: Option<f64>,
    pub w_e: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameDiagnostics {
    pub blocks: Vec<BlockDiagnostics>,
    pub graph: TransitionGraph,
    pub alpha: EquilibriumWeights,
}

impl FrameDiagnostics {
    pub fn blocks_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("block,phi,theta,mean,alpha,overlap,entropy,flow_difference,p1,p2,w_a,w_e\n");
        for b in &self.blocks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                b.block,
                b.phi,
                b.theta,
                b.mean,
                b.alpha,
                opt(b.overlap),
                opt(b.entropy),
                opt(b.flow_difference),
                opt(b.p_complementary),
                opt(b.p_adversarial),
                opt(b.w_a),
                opt(b.w_e)
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub frame_index: usize,
    /// Prediction normalized to `[0, 1]`.
    pub prediction: EquirectMap,
    pub diagnostics: Option<FrameDiagnostics>,
}

struct AugmentationInfo {
    overlap: f64,
    entropy: f64,
    delta_f: f64,
    p: (f64, f64),
    w: (f64, f64),
}

struct BlockOutput {
    map: BlockFeatureMap,
    aug: Option<AugmentationInfo>,
}

/// Prediction of frames of one panorama size under one configuration.
pub struct Pipeline {
    config: PipelineConfig,
    width: usize,
    height: usize,
    targets: Vec<SphereCoord>,
    viewports: Vec<ViewportSpec>,
    filter: SphericalGaussian,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, width: usize, height: usize) -> Result<Self> {
        config.validate()?;
        let viewports = config.viewports()?;
        let targets = viewports.iter().map(|v| v.center()).collect();
        let filter = SphericalGaussian::new(width, height, config.rearrange_sigma)?;
        Ok(Self {
            config,
            width,
            height,
            targets,
            viewports,
            filter,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn viewports(&self) -> &[ViewportSpec] {
        &self.viewports
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", frame.width(), frame.height()),
            });
        }
        Ok(())
    }

    /// Predicts the saliency of `frame`. `previous` is the frame flow is
    /// measured against; without it temporal saliency is zero. Without a
    /// mask, or with an empty one, no augmentation weighting is applied.
    pub fn run_frame(
        &self,
        frame_index: usize,
        frame: &Frame,
        previous: Option<&Frame>,
        mask: Option<&AugmentationMask>,
    ) -> Result<FrameResult> {
        self.run_frame_inner(frame_index, frame, previous, mask)
            .map_err(|e| e.in_frame(frame_index))
    }

    /// Per-block feature maps after fusion and augmentation weighting,
    /// before graph weighting.
    pub fn block_maps(
        &self,
        frame_index: usize,
        frame: &Frame,
        previous: Option<&Frame>,
        mask: Option<&AugmentationMask>,
    ) -> Result<Vec<BlockFeatureMap>> {
        let outputs = self
            .block_outputs(frame_index, frame, previous, mask)
            .map_err(|e| e.in_frame(frame_index))?;
        Ok(outputs.into_iter().map(|o| o.map).collect())
    }

    /// The on-sphere filter used for rearrangement.
    pub fn filter(&self) -> &SphericalGaussian {
        &self.filter
    }

    fn block_outputs(
        &self,
        frame_index: usize,
        frame: &Frame,
        previous: Option<&Frame>,
        mask: Option<&AugmentationMask>,
    ) -> Result<Vec<BlockOutput>> {
        self.check_frame(frame)?;
        if let Some(p) = previous {
            self.check_frame(p)?;
        }
        let mask = match mask {
            Some(m) if self.config.enable_f4 && !m.is_empty() => {
                if m.map().width() != self.width || m.map().height() != self.height {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{}x{} mask", self.width, self.height),
                        actual: format!("{}x{}", m.map().width(), m.map().height()),
                    });
                }
                Some(m)
            }
            _ => None,
        };
        self.viewports
            .par_iter()
            .enumerate()
            .map(|(i, spec)| self.process_block(frame_index, i, spec, frame, previous, mask))
            .collect()
    }

    fn run_frame_inner(
        &self,
        frame_index: usize,
        frame: &Frame,
        previous: Option<&Frame>,
        mask: Option<&AugmentationMask>,
    ) -> Result<FrameResult> {
        let outputs = self.block_outputs(frame_index, frame, previous, mask)?;

        let means: Vec<f64> = outputs.iter().map(|o| o.map.mean()).collect();
        let graph = build_graph(&self.targets, &means, &self.config.graph)?;
        let alpha = if self.config.enable_f5 {
            equilibrium(
                &graph,
                self.config.equilibrium_tolerance,
                self.config.equilibrium_max_iterations,
            )?
        } else {
            EquilibriumWeights::uniform(self.viewports.len())
        };
        let maps: Vec<BlockFeatureMap> = outputs.iter().map(|o| o.map.clone()).collect();
        let prediction = rearrange(&alpha, &maps, &self.filter, self.config.smoothing)?;

        let diagnostics = self.config.diagnostics.then(|| FrameDiagnostics {
            blocks: outputs
                .iter()
                .enumerate()
                .map(|(i, o)| BlockDiagnostics {
                    block: i,
                    phi: self.targets[i].phi(),
                    theta: self.targets[i].theta(),
                    mean: means[i],
                    alpha: alpha.alpha()[i],
                    overlap: o.aug.as_ref().map(|a| a.overlap),
                    entropy: o.aug.as_ref().map(|a| a.entropy),
                    flow_difference: o.aug.as_ref().map(|a| a.delta_f),
                    p_complementary: o.aug.as_ref().map(|a| a.p.0),
                    p_adversarial: o.aug.as_ref().map(|a| a.p.1),
                    w_a: o.aug.as_ref().map(|a| a.w.0),
                    w_e: o.aug.as_ref().map(|a| a.w.1),
                })
                .collect(),
            graph,
            alpha,
        });
        Ok(FrameResult {
            frame_index,
            prediction,
            diagnostics,
        })
    }

    fn process_block(
        &self,
        frame_index: usize,
        index: usize,
        spec: &ViewportSpec,
        frame: &Frame,
        previous: Option<&Frame>,
        mask: Option<&AugmentationMask>,
    ) -> Result<BlockOutput> {
        let sampler = BlockSampler::new(*spec, self.width, self.height);
        let block = sampler.extract(frame);

        let spatial = match &self.config.spatial_source {
            FeatureSource::ExternalFile(root) => load_external_spatial(root, frame_index, index, spec)?,
            _ => spatial_saliency(&block),
        };
        let flow: Option<FlowField> = match previous {
            None => None,
            Some(prev) => Some(match &self.config.flow_source {
                FeatureSource::ExternalFile(root) => load_external_flow(root, frame_index, index, spec)?,
                _ => optical_flow(&sampler.extract(prev), &block, &self.config.flow)?,
            }),
        };
        let temporal = match &flow {
            Some(f) => temporal_saliency(f, self.config.temporal_sigma_px)?.into_values(),
            None => vec![0.0; spec.pixel_count()],
        };
        let fused = BlockFeatureMap::new(*spec, fuse(spatial.values(), &temporal, self.config.fusion)?)?;

        let Some(mask) = mask else {
            return Ok(BlockOutput { map: fused, aug: None });
        };
        let part = partition_from_block_mask(index, &sampler.extract_scalar(mask.map()));
        if !(part.overlap_ratio > self.config.overlap_threshold) {
            return Ok(BlockOutput { map: fused, aug: None });
        }
        let entropy = block_entropy(&block, &part.aug_pixels)?;
        let delta_f = match &flow {
            Some(f) if !part.aug_pixels.is_empty() && !part.env_pixels.is_empty() => flow_difference(
                mean_region_flow(f, &part.aug_pixels)?,
                mean_region_flow(f, &part.env_pixels)?,
            ),
            _ => 0.0,
        };
        let p = augmentation_probability(delta_f, &self.config.aug_model)?;
        let w = augmentation_weights(entropy, p.0, p.1);
        let map = apply_spatial_weighting(&fused, &part, w.0, w.1)?;
        Ok(BlockOutput {
            map,
            aug: Some(AugmentationInfo {
                overlap: part.overlap_ratio,
                entropy,
                delta_f,
                p,
                w,
            }),
        })
    }
}

/// One-shot [`Pipeline::run_frame`].
pub fn run_frame(
    frame_index: usize,
    frame: &Frame,
    previous: Option<&Frame>,
    mask: Option<&AugmentationMask>,
    config: &PipelineConfig,
) -> Result<FrameResult> {
    Pipeline::new(config.clone(), frame.width(), frame.height())?.run_frame(frame_index, frame, previous, mask)
}

/// Random access to the frames and masks of one video.
pub trait FrameSource: Sync {
    /// Indices of the frames present.
    fn frame_indices(&self) -> Result<BTreeSet<usize>>;
    fn load_frame(&self, index: usize) -> Result<Frame>;
    /// Mask of frame `index`, if the video has one for it.
    fn load_mask(&self, index: usize) -> Result<Option<AugmentationMask>>;
}

/// Frames and masks held in memory.
#[derive(Clone, Debug, Default)]
pub struct MemoryFrames {
    pub frames: BTreeMap<usize, Frame>,
    pub masks: BTreeMap<usize, AugmentationMask>,
}

impl MemoryFrames {
    pub fn from_frames(frames: Vec<Frame>) -> Self {
        Self {
            frames: frames.into_iter().enumerate().collect(),
            masks: BTreeMap::new(),
        }
    }
}

impl FrameSource for MemoryFrames {
    fn frame_indices(&self) -> Result<BTreeSet<usize>> {
        Ok(self.frames.keys().copied().collect())
    }

    fn load_frame(&self, index: usize) -> Result<Frame> {
        self.frames
            .get(&index)
            .cloned()
            .ok_or(Error::MissingFrames(vec![index]))
    }

    fn load_mask(&self, index: usize) -> Result<Option<AugmentationMask>> {
        Ok(self.masks.get(&index).cloned())
    }
}

/// Frame indices processed for a video whose last frame is `last`.
pub fn sampled_indices(last: usize, stride: usize) -> Vec<usize> {
    (0..=last).step_by(stride.max(1)).collect()
}

/// Predicts frames `0, s, 2s, …` of a video and hands each result to
/// `sink` in ascending frame order. Frames are processed in batches of one
/// per worker thread.
pub fn for_each_frame(
    source: &dyn FrameSource,
    config: &PipelineConfig,
    mut sink: impl FnMut(FrameResult) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    let present = source.frame_indices()?;
    let Some(&last) = present.iter().next_back() else {
        return Err(Error::invalid("video has no frames"));
    };
    let sampled = sampled_indices(last, config.frame_stride);
    let needed: BTreeSet<usize> = sampled
        .iter()
        .flat_map(|&t| {
            let pred = match config.flow_pairing {
                FlowPairing::SampledFrames => None,
                FlowPairing::AdjacentFrames => t.checked_sub(1),
            };
            std::iter::once(t).chain(pred)
        })
        .collect();
    let missing: Vec<usize> = needed.iter().copied().filter(|i| !present.contains(i)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingFrames(missing));
    }

    let first = source.load_frame(0)?;
    let pipeline = Pipeline::new(config.clone(), first.width(), first.height())?;
    drop(first);
    let jobs: Vec<(usize, usize)> = sampled.iter().copied().enumerate().collect();
    for batch in jobs.chunks(rayon::current_num_threads().max(1)) {
        let results: Vec<FrameResult> = batch
            .par_iter()
            .map(|&(k, t)| {
                let frame = source.load_frame(t)?;
                let previous = match (k, config.flow_pairing) {
                    (0, _) => None,
                    (_, FlowPairing::SampledFrames) => Some(source.load_frame(sampled[k - 1])?),
                    (_, FlowPairing::AdjacentFrames) => Some(source.load_frame(t - 1)?),
                };
                let mask = source.load_mask(t)?;
                pipeline.run_frame(t, &frame, previous.as_ref(), mask.as_ref())
            })
            .collect::<Result<_>>()?;
        for r in results {
            sink(r)?;
        }
    }
    Ok(())
}

/// Results of a video run and, when fixations were supplied, their scores.
#[derive(Clone, Debug)]
pub struct VideoOutput {
    pub results: Vec<FrameResult>,
    pub report: Option<EvaluationReport>,
}

/// Predicts all sampled frames and scores frames with fixations.
pub fn run_video(source: &dyn FrameSource, config: &PipelineConfig, fixations: Option<&BTreeMap<usize, FixationMap>>) -> Result<VideoOutput> {
    let mut results = Vec::new();
    for_each_frame(source, config, |r| {
        results.push(r);
        Ok(())
    })?;
    let report = match fixations {
        None => None,
        Some(fix) => Some(evaluate_results(&results, fix, config.gt_sigma, &MetricOptions::default())?),
    };
    Ok(VideoOutput { results, report })
}

/// Scores predictions against the fixation maps of their frames.
pub fn evaluate_results(
    results: &[FrameResult],
    fixations: &BTreeMap<usize, FixationMap>,
    gt_sigma: f64,
    opts: &MetricOptions,
) -> Result<EvaluationReport> {
    let first = results.first().ok_or_else(|| Error::invalid("no predictions to evaluate"))?;
    let frames: Vec<EvaluationFrame<'_>> = results
        .iter()
        .filter_map(|r| {
            fixations.get(&r.frame_index).map(|f| EvaluationFrame {
                frame_index: r.frame_index,
                prediction: &r.prediction,
                fixations: f,
            })
        })
        .collect();
    let filter = SphericalGaussian::new(first.prediction.width(), first.prediction.height(), gt_sigma)?;
    evaluate(&frames, &filter, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            n_targets: 12,
            block_resolution: 24,
            rearrange_sigma: 0.08,
            flow: FlowParams {
                max_iterations: 20,
                ..FlowParams::default()
            },
            diagnostics: true,
            ..PipelineConfig::default()
        }
    }

    fn textured(w: usize, h: usize, shift: f64) -> Frame {
        Frame::from_fn(w, h, |c| {
            let v = 128.0 + 100.0 * ((3.0 * c.theta() + shift).sin() * (4.0 * c.phi()).cos());
            [v as u8, (v * 0.7) as u8, 40]
        })
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = |f: fn(&mut PipelineConfig)| {
            let mut c = PipelineConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.frame_stride = 0));
        assert!(bad(|c| c.overlap_threshold = 1.0));
        assert!(bad(|c| c.graph.phi_delta = 0.0));
        assert!(bad(|c| c.graph.sigma_dist = 4.0));
    }

    #[test]
    fn black_frames_predict_zero() {
        let black = Frame::new(64, 32, vec![0; 64 * 32 * 3]).unwrap();
        let r = run_frame(0, &black, Some(&black), None, &small_config()).unwrap();
        assert!(r.prediction.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prediction_normalized() {
        let a = textured(64, 32, 0.0);
        let b = textured(64, 32, 0.1);
        let r = run_frame(5, &b, Some(&a), None, &small_config()).unwrap();
        assert_eq!(r.prediction.max(), 1.0);
        assert_eq!(r.prediction.min(), 0.0);
        let d = r.diagnostics.unwrap();
        assert_eq!(d.blocks.len(), 12);
        assert!((d.alpha.alpha().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.blocks.iter().all(|b| b.w_a.is_none()));
    }

    #[test]
    fn empty_mask_is_no_mask() {
        let a = textured(64, 32, 0.0);
        let b = textured(64, 32, 0.2);
        let empty = AugmentationMask::new(EquirectMap::zeros(64, 32)).unwrap();
        let c = small_config();
        let x = run_frame(5, &b, Some(&a), None, &c).unwrap();
        let y = run_frame(5, &b, Some(&a), Some(&empty), &c).unwrap();
        assert_eq!(x.prediction, y.prediction);
    }

    #[test]
    fn mask_weights_recorded() {
        let a = textured(64, 32, 0.0);
        let mask = AugmentationMask::from_nonzero(&EquirectMap::from_fn(64, 32, |c| {
            if (c.phi() - PI / 2.0).abs() < 0.6 { 1.0 } else { 0.0 }
        }));
        let r = run_frame(0, &a, None, Some(&mask), &small_config()).unwrap();
        let d = r.diagnostics.unwrap();
        let weighted: Vec<_> = d.blocks.iter().filter(|b| b.w_a.is_some()).collect();
        assert!(!weighted.is_empty());
        for b in weighted {
            assert!((b.w_a.unwrap() + b.w_e.unwrap() - 2.0).abs() < 1e-12);
            assert_eq!(b.flow_difference, Some(0.0));
        }
    }

    #[test]
    fn disabled_f5_uses_uniform_weights() {
        let a = textured(64, 32, 0.0);
        let c = PipelineConfig {
            enable_f5: false,
            ..small_config()
        };
        let r = run_frame(0, &a, None, None, &c).unwrap();
        assert_eq!(r.diagnostics.unwrap().alpha, EquilibriumWeights::uniform(12));
    }

    #[test]
    fn video_sampling_and_order() {
        let frames: Vec<Frame> = (0..12).map(|i| textured(48, 24, 0.05 * i as f64)).collect();
        let src = MemoryFrames::from_frames(frames);
        let c = PipelineConfig {
            frame_stride: 5,
            diagnostics: false,
            ..small_config()
        };
        let out = run_video(&src, &c, None).unwrap();
        let idx: Vec<usize> = out.results.iter().map(|r| r.frame_index).collect();
        assert_eq!(idx, vec![0, 5, 10]);
        let again = run_video(&src, &c, None).unwrap();
        assert_eq!(out.results, again.results);
    }

    #[test]
    fn missing_frames_listed() {
        let mut src = MemoryFrames::from_frames((0..11).map(|i| textured(48, 24, i as f64)).collect());
        src.frames.remove(&5);
        src.frames.remove(&3);
        let c = PipelineConfig {
            frame_stride: 5,
            ..small_config()
        };
        match run_video(&src, &c, None) {
            Err(Error::MissingFrames(v)) => assert_eq!(v, vec![5]),
            other => panic!("unexpected {other:?}"),
        }
        let c = PipelineConfig {
            flow_pairing: FlowPairing::AdjacentFrames,
            ..c
        };
        src.frames.insert(5, textured(48, 24, 0.0));
        src.frames.remove(&4);
        match run_video(&src, &c, None) {
            Err(Error::MissingFrames(v)) => assert_eq!(v, vec![4]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampled_indices_arithmetic() {
        assert_eq!(sampled_indices(29, 5), vec![0, 5, 10, 15, 20, 25]);
        assert_eq!(sampled_indices(0, 5), vec![0]);
    }
}
