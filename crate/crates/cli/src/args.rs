use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vbas", version, about = "Saliency prediction for augmented 360° video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict saliency maps for a frame directory.
    Predict(PredictArgs),
    /// Score predicted maps against a gaze log.
    Evaluate(EvaluateArgs),
    /// Turn a gaze log into ground-truth saliency maps.
    Gaze(GazeArgs),
    /// Print the block centers as `phi,theta` lines.
    Targets(TargetsArgs),
}

/// Pipeline settings; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct PipelineArgs {
    /// `key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_targets: Option<String>,
    #[arg(long)]
    pub fov: Option<String>,
    #[arg(long)]
    pub block_resolution: Option<String>,
    #[arg(long)]
    pub frame_stride: Option<String>,
    /// product, max or sum.
    #[arg(long)]
    pub fusion: Option<String>,
    /// complementary (c1) or adversarial (c2).
    #[arg(long)]
    pub prior: Option<String>,
    /// kernel or density.
    #[arg(long)]
    pub gaussian_form: Option<String>,
    #[arg(long)]
    pub overlap_threshold: Option<String>,
    #[arg(long)]
    pub phi_delta: Option<String>,
    #[arg(long)]
    pub theta_delta: Option<String>,
    #[arg(long)]
    pub sigma_dist: Option<String>,
    #[arg(long)]
    pub temporal_sigma_px: Option<String>,
    #[arg(long)]
    pub rearrange_sigma: Option<String>,
    #[arg(long)]
    pub gt_sigma: Option<String>,
    #[arg(long)]
    pub flow_smoothness: Option<String>,
    #[arg(long)]
    pub flow_iterations: Option<String>,
    #[arg(long)]
    pub flow_tolerance: Option<String>,
    /// sampled or adjacent.
    #[arg(long)]
    pub flow_pairing: Option<String>,
    /// `builtin` or a feature directory.
    #[arg(long)]
    pub spatial_source: Option<String>,
    /// `builtin` or a feature directory.
    #[arg(long)]
    pub flow_source: Option<String>,
    /// per-block or post-sum.
    #[arg(long)]
    pub smoothing: Option<String>,
    /// Skip augmentation weighting.
    #[arg(long)]
    pub no_f4: bool,
    /// Weight all blocks uniformly.
    #[arg(long)]
    pub no_f5: bool,
    /// Write per-block diagnostics.
    #[arg(long)]
    pub diagnostics: bool,
}

impl PipelineArgs {
    /// Settings given on the command line, by config key.
    pub fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("n_targets", &self.n_targets);
        push("fov", &self.fov);
        push("block_resolution", &self.block_resolution);
        push("frame_stride", &self.frame_stride);
        push("fusion", &self.fusion);
        push("prior", &self.prior);
        push("gaussian_form", &self.gaussian_form);
        push("overlap_threshold", &self.overlap_threshold);
        push("phi_delta", &self.phi_delta);
        push("theta_delta", &self.theta_delta);
        push("sigma_dist", &self.sigma_dist);
        push("temporal_sigma_px", &self.temporal_sigma_px);
        push("rearrange_sigma", &self.rearrange_sigma);
        push("gt_sigma", &self.gt_sigma);
        push("flow_smoothness", &self.flow_smoothness);
        push("flow_iterations", &self.flow_iterations);
        push("flow_tolerance", &self.flow_tolerance);
        push("flow_pairing", &self.flow_pairing);
        push("spatial_source", &self.spatial_source);
        push("flow_source", &self.flow_source);
        push("smoothing", &self.smoothing);
        if self.no_f4 {
            out.push(("enable_f4", "false".into()));
        }
        if self.no_f5 {
            out.push(("enable_f5", "false".into()));
        }
        if self.diagnostics {
            out.push(("diagnostics", "true".into()));
        }
        out
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Video directory with `frames/` and optional `masks/`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Blend heatmaps over the frames.
    #[arg(long)]
    pub overlay: bool,
    /// Gaze CSV to score the predictions against.
    #[arg(long)]
    pub gaze: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum Weighting {
    #[default]
    Sin,
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum KlOrder {
    /// KL(gt ‖ pred).
    #[default]
    GtPred,
    /// KL(pred ‖ gt).
    PredGt,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted `frame_NNNNNN.vbfm` maps.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub gaze: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Ground-truth smoothing, radians (`pi` suffix allowed).
    #[arg(long)]
    pub gt_sigma: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub weighting: Weighting,
    #[arg(long, value_enum, default_value_t)]
    pub kl_order: KlOrder,
}

#[derive(Debug, Args)]
pub struct GazeArgs {
    #[arg(long)]
    pub gaze: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Ground-truth smoothing, radians (`pi` suffix allowed).
    #[arg(long)]
    pub gt_sigma: Option<String>,
}

#[derive(Debug, Args)]
pub struct TargetsArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
}
