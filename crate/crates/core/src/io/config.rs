//! `key = value` configuration files.
//!
//! One setting per line; `#` starts a comment. Angles are radians and may
//! be written as multiples of π, e.g. `0.3pi`.

use std::path::{Path, PathBuf};

use crate::augmentation::{AugmentationType, GaussianForm};
use crate::error::{Error, Result};
use crate::features::FeatureSource;
use crate::fusion::FusionStrategy;
use crate::graph::SmoothingMode;
use crate::pipeline::{FlowPairing, PipelineConfig};

/// Settings in file order, with the byte offset of each line.
pub fn parse_config_text(text: &str) -> Result<Vec<(u64, String, String)>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for raw in text.split_inclusive('\n') {
        let line = raw.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                offset,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Parse {
                    offset,
                    message: "empty key".into(),
                });
            }
            out.push((offset, k.to_string(), v.to_string()));
        }
        offset += raw.len() as u64;
    }
    Ok(out)
}

/// Reads a config file and applies it on top of `base`.
pub fn read_config(path: &Path, base: PipelineConfig) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = base;
    for (offset, key, value) in parse_config_text(&text).map_err(|e| located(path, e))? {
        apply_setting(&mut config, &key, &value).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("byte {offset}: {e}"),
        })?;
    }
    Ok(config)
}

fn located(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { offset, message } => Error::Format {
            path: path.to_path_buf(),
            message: format!("byte {offset}: {message}"),
        },
        e => e,
    }
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("{key}: '{value}' is not a number")))
}

/// Parses an angle in radians, accepting a `pi` suffix.
pub fn parse_angle(key: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    if let Some(k) = v.strip_suffix("pi").or_else(|| v.strip_suffix('π')) {
        let k = k.trim().trim_end_matches('*').trim();
        let k = if k.is_empty() { 1.0 } else { number(key, k)? };
        return Ok(k * std::f64::consts::PI);
    }
    number(key, v)
}

fn integer(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::invalid(format!("{key}: '{value}' is not a nonnegative integer")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("{key}: '{value}' is not a boolean"))),
    }
}

fn source(value: &str, builtin: FeatureSource) -> FeatureSource {
    if value == "builtin" {
        builtin
    } else {
        FeatureSource::ExternalFile(PathBuf::from(value))
    }
}

/// Applies one named setting.
pub fn apply_setting(c: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "n_targets" => c.n_targets = integer(key, value)?,
        "fov" => c.fov = parse_angle(key, value)?,
        "block_resolution" => c.block_resolution = integer(key, value)?,
        "frame_stride" => c.frame_stride = integer(key, value)?,
        "fusion" => c.fusion = value.parse::<FusionStrategy>()?,
        "prior" => c.aug_model.prior = value.parse::<AugmentationType>()?,
        "gaussian_form" => {
            c.aug_model.form = match value {
                "kernel" => GaussianForm::Kernel,
                "density" => GaussianForm::Density,
                _ => return Err(Error::invalid(format!("{key}: unknown form '{value}'"))),
            }
        }
        "mu_complementary" => c.aug_model.mu_complementary = number(key, value)?,
        "sigma_complementary" => c.aug_model.sigma_complementary = number(key, value)?,
        "mu_adversarial" => c.aug_model.mu_adversarial = number(key, value)?,
        "sigma_adversarial" => c.aug_model.sigma_adversarial = number(key, value)?,
        "overlap_threshold" => c.overlap_threshold = number(key, value)?,
        "phi_delta" => c.graph.phi_delta = parse_angle(key, value)?,
        "theta_delta" => c.graph.theta_delta = parse_angle(key, value)?,
        "sigma_dist" => c.graph.sigma_dist = parse_angle(key, value)?,
        "temporal_sigma_px" => c.temporal_sigma_px = number(key, value)?,
        "rearrange_sigma" => c.rearrange_sigma = parse_angle(key, value)?,
        "gt_sigma" => c.gt_sigma = parse_angle(key, value)?,
        "flow_smoothness" => c.flow.smoothness = number(key, value)?,
        "flow_iterations" => c.flow.max_iterations = integer(key, value)?,
        "flow_tolerance" => c.flow.tolerance = number(key, value)?,
        "flow_pairing" => {
            c.flow_pairing = match value {
                "sampled" => FlowPairing::SampledFrames,
                "adjacent" => FlowPairing::AdjacentFrames,
                _ => return Err(Error::invalid(format!("{key}: expected 'sampled' or 'adjacent', got '{value}'"))),
            }
        }
        "spatial_source" => c.spatial_source = source(value, FeatureSource::BuiltinSpatial),
        "flow_source" => c.flow_source = source(value, FeatureSource::BuiltinFlow),
        "enable_f4" => c.enable_f4 = boolean(key, value)?,
        "enable_f5" => c.enable_f5 = boolean(key, value)?,
        "smoothing" => {
            c.smoothing = match value {
                "per-block" => SmoothingMode::PerBlock,
                "post-sum" => SmoothingMode::PostSum,
                _ => return Err(Error::invalid(format!("{key}: expected 'per-block' or 'post-sum', got '{value}'"))),
            }
        }
        "equilibrium_tolerance" => c.equilibrium_tolerance = number(key, value)?,
        "equilibrium_max_iterations" => c.equilibrium_max_iterations = integer(key, value)?,
        "diagnostics" => c.diagnostics = boolean(key, value)?,
        _ => return Err(Error::invalid(format!("unknown setting '{key}'"))),
    }
    Ok(())
}

/// Serializes every setting so that parsing the text reproduces `c`.
pub fn config_to_text(c: &PipelineConfig) -> String {
    let src = |s: &FeatureSource| match s {
        FeatureSource::ExternalFile(p) => p.display().to_string(),
        _ => "builtin".to_string(),
    };
    let form = match c.aug_model.form {
        GaussianForm::Kernel => "kernel",
        GaussianForm::Density => "density",
    };
    let pairing = match c.flow_pairing {
        FlowPairing::SampledFrames => "sampled",
        FlowPairing::AdjacentFrames => "adjacent",
    };
    let smoothing = match c.smoothing {
        SmoothingMode::PerBlock => "per-block",
        SmoothingMode::PostSum => "post-sum",
    };
    let prior = match c.aug_model.prior {
        AugmentationType::Complementary => "complementary",
        AugmentationType::Adversarial => "adversarial",
    };
    let lines = [
        ("n_targets", c.n_targets.to_string()),
        ("fov", format!("{:?}", c.fov)),
        ("block_resolution", c.block_resolution.to_string()),
        ("frame_stride", c.frame_stride.to_string()),
        ("fusion", c.fusion.to_string()),
        ("prior", prior.to_string()),
        ("gaussian_form", form.to_string()),
        ("mu_complementary", format!("{:?}", c.aug_model.mu_complementary)),
        ("sigma_complementary", format!("{:?}", c.aug_model.sigma_complementary)),
        ("mu_adversarial", format!("{:?}", c.aug_model.mu_adversarial)),
        ("sigma_adversarial", format!("{:?}", c.aug_model.sigma_adversarial)),
        ("overlap_threshold", format!("{:?}", c.overlap_threshold)),
        ("phi_delta", format!("{:?}", c.graph.phi_delta)),
        ("theta_delta", format!("{:?}", c.graph.theta_delta)),
        ("sigma_dist", format!("{:?}", c.graph.sigma_dist)),
        ("temporal_sigma_px", format!("{:?}", c.temporal_sigma_px)),
        ("rearrange_sigma", format!("{:?}", c.rearrange_sigma)),
        ("gt_sigma", format!("{:?}", c.gt_sigma)),
        ("flow_smoothness", format!("{:?}", c.flow.smoothness)),
        ("flow_iterations", c.flow.max_iterations.to_string()),
        ("flow_tolerance", format!("{:?}", c.flow.tolerance)),
        ("flow_pairing", pairing.to_string()),
        ("spatial_source", src(&c.spatial_source)),
        ("flow_source", src(&c.flow_source)),
        ("enable_f4", c.enable_f4.to_string()),
        ("enable_f5", c.enable_f5.to_string()),
        ("smoothing", smoothing.to_string()),
        ("equilibrium_tolerance", format!("{:?}", c.equilibrium_tolerance)),
        ("equilibrium_max_iterations", c.equilibrium_max_iterations.to_string()),
        ("diagnostics", c.diagnostics.to_string()),
    ];
    lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_comments_and_angles() {
        let text = "# header\nn_targets = 32  # fewer\n\nphi_delta = 0.25pi\nfusion=max\n";
        let mut c = PipelineConfig::default();
        for (_, k, v) in parse_config_text(text).unwrap() {
            apply_setting(&mut c, &k, &v).unwrap();
        }
        assert_eq!(c.n_targets, 32);
        assert_eq!(c.graph.phi_delta, 0.25 * PI);
        assert_eq!(c.fusion, FusionStrategy::Max);
    }

    #[test]
    fn malformed_line_reports_offset() {
        match parse_config_text("a = 1\nbroken\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        let mut c = PipelineConfig::default();
        assert!(apply_setting(&mut c, "nope", "1").is_err());
        assert!(apply_setting(&mut c, "n_targets", "-3").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig {
            n_targets: 17,
            enable_f4: false,
            spatial_source: FeatureSource::ExternalFile("feat dir".into()),
            ..PipelineConfig::default()
        };
        c.graph.sigma_dist = 0.1234567890123;
        c.aug_model.prior = AugmentationType::Complementary;
        let mut back = PipelineConfig::default();
        for (_, k, v) in parse_config_text(&config_to_text(&c)).unwrap() {
            apply_setting(&mut back, &k, &v).unwrap();
        }
        assert_eq!(back, c);
    }
}
