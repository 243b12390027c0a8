use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use vbas_core::gaze::{
    build_fixation_map, filter_saccades, fixations_by_frame, ground_truth_with, group_traces, packed_saliency,
    FixationMap, GazeTrace,
};
use vbas_core::io::config::parse_angle;
use vbas_core::io::frames::{frame_name, read_frame_png};
use vbas_core::io::heatmap::render_heatmap;
use vbas_core::io::{
    apply_setting, frame_path, mask_path, read_config, read_gaze_csv, read_map, sha256_file, write_atomic,
    write_map, RunManifest,
};
use vbas_core::metrics::{evaluate, AreaWeighting, EvaluationFrame, KlDirection, MetricOptions};
use vbas_core::pipeline::{evaluate_results, for_each_frame, FlowPairing, FrameResult, PipelineConfig};
use vbas_core::sphere::{generate_targets, SphericalGaussian, DEFAULT_SIGMA};
use vbas_core::io::DirectoryFrames;
use vbas_core::{EquirectMap, Error};

use crate::args::{Cli, Command, EvaluateArgs, GazeArgs, KlOrder, PipelineArgs, PredictArgs, TargetsArgs, Weighting};

/// Process exit status for a failed command.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>().map(Error::root) {
        Some(Error::InvalidArgument(_)) => 1,
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Gaze(a) => gaze(a),
        Command::Targets(a) => targets(a),
    }
}

fn load_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut config = match &a.config {
        Some(p) => read_config(p, PipelineConfig::default())?,
        None => PipelineConfig::default(),
    };
    for (k, v) in a.settings() {
        apply_setting(&mut config, k, &v)?;
    }
    config.validate()?;
    Ok(config)
}

fn sigma_arg(v: &Option<String>) -> Result<f64> {
    let sigma = match v {
        Some(s) => parse_angle("gt_sigma", s)?,
        None => DEFAULT_SIGMA,
    };
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("gt_sigma must be positive".into()).into());
    }
    Ok(sigma)
}

fn traces(path: &Path) -> Result<Vec<GazeTrace>> {
    let samples = read_gaze_csv(path)?;
    Ok(group_traces(samples)?
        .iter()
        .map(|t| filter_saccades(t).trace)
        .collect())
}

fn fixation_maps(traces: &[GazeTrace], width: usize, height: usize) -> BTreeMap<usize, FixationMap> {
    fixations_by_frame(traces)
        .into_iter()
        .map(|(f, pts)| (f, build_fixation_map(&pts, width, height)))
        .collect()
}

fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).display().to_string()
}

fn stem(index: usize) -> String {
    frame_name(index).trim_end_matches(".png").to_string()
}

fn predict(a: PredictArgs) -> Result<()> {
    let config = load_config(&a.pipeline)?;
    let source = DirectoryFrames::new(&a.input);
    let maps_dir = a.out.join("maps");
    let heat_dir = a.out.join("heatmaps");
    let reports = a.out.join("reports");
    let mut manifest = RunManifest::new(config.clone());
    if let Some(c) = &a.pipeline.config {
        manifest.inputs.insert(c.display().to_string(), sha256_file(c)?);
    }

    let mut kept: Vec<FrameResult> = Vec::new();
    for_each_frame(&source, &config, |r| {
        let t = r.frame_index;
        let mut inputs = vec![frame_path(&a.input, t), mask_path(&a.input, t)];
        if config.flow_pairing == FlowPairing::AdjacentFrames && t > 0 {
            inputs.push(frame_path(&a.input, t - 1));
        }
        for p in inputs.iter().filter(|p| p.exists()) {
            manifest.inputs.insert(relative(&a.input, p), sha256_file(p)?);
        }

        let name = stem(t);
        let map_path = maps_dir.join(format!("{name}.vbfm"));
        write_map(&map_path, &r.prediction)?;
        let overlay = if a.overlay {
            Some(read_frame_png(&frame_path(&a.input, t))?)
        } else {
            None
        };
        let heat_path = heat_dir.join(format!("{name}.png"));
        write_atomic(&heat_path, &render_heatmap(&r.prediction, overlay.as_ref())?)?;
        let mut outputs = vec![relative(&a.out, &map_path), relative(&a.out, &heat_path)];
        if let Some(d) = &r.diagnostics {
            for (suffix, text) in [
                ("blocks", d.blocks_csv()),
                ("graph", d.graph.to_csv()),
                ("alpha", d.alpha.to_csv()),
            ] {
                let p = reports.join(format!("{name}_{suffix}.csv"));
                write_atomic(&p, text.as_bytes())?;
                outputs.push(relative(&a.out, &p));
            }
        }
        manifest.outputs.insert(t, outputs);
        log::info!("frame {t} done");
        if a.gaze.is_some() {
            kept.push(r);
        }
        Ok(())
    })?;
    manifest.write(&reports.join("manifest.json"))?;

    if let Some(g) = &a.gaze {
        manifest.inputs.insert(g.display().to_string(), sha256_file(g)?);
        manifest.write(&reports.join("manifest.json"))?;
        let first = kept.first().context("no frames predicted")?;
        let (w, h) = (first.prediction.width(), first.prediction.height());
        let fix = fixation_maps(&traces(g)?, w, h);
        let report = evaluate_results(&kept, &fix, config.gt_sigma, &MetricOptions::default())?;
        write_atomic(&reports.join("evaluation.csv"), report.to_csv().as_bytes())?;
    }
    Ok(())
}

fn prediction_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })? {
        let entry = entry.with_context(|| dir.display().to_string())?;
        let name = entry.file_name().to_string_lossy().to_string();
        let idx = name
            .strip_prefix("frame_")
            .and_then(|s| s.strip_suffix(".vbfm"))
            .and_then(|s| s.parse::<usize>().ok());
        if let Some(i) = idx {
            out.push((i, entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let sigma = sigma_arg(&a.gt_sigma)?;
    let files = prediction_files(&a.predictions)?;
    if files.is_empty() {
        return Err(Error::Format {
            path: a.predictions.clone(),
            message: "no frame_NNNNNN.vbfm predictions found".into(),
        }
        .into());
    }
    let maps: Vec<(usize, EquirectMap)> = files
        .iter()
        .map(|(i, p)| Ok((*i, read_map(p)?)))
        .collect::<Result<_>>()?;
    let (w, h) = (maps[0].1.width(), maps[0].1.height());
    let fix = fixation_maps(&traces(&a.gaze)?, w, h);
    let frames: Vec<EvaluationFrame<'_>> = maps
        .iter()
        .filter_map(|(i, m)| {
            fix.get(i).map(|f| EvaluationFrame {
                frame_index: *i,
                prediction: m,
                fixations: f,
            })
        })
        .collect();
    let opts = MetricOptions {
        weighting: match a.weighting {
            Weighting::Sin => AreaWeighting::SinPhi,
            Weighting::Uniform => AreaWeighting::Uniform,
        },
        kl_direction: match a.kl_order {
            KlOrder::GtPred => KlDirection::GroundTruthFirst,
            KlOrder::PredGt => KlDirection::PredictionFirst,
        },
    };
    let filter = SphericalGaussian::new(w, h, sigma)?;
    let report = evaluate(&frames, &filter, &opts)?;
    let csv = report.to_csv();
    write_atomic(&a.out.join("reports").join("evaluation.csv"), csv.as_bytes())?;
    std::io::stdout().write_all(csv.as_bytes())?;
    Ok(())
}

fn gaze(a: GazeArgs) -> Result<()> {
    if a.width == 0 || a.height == 0 {
        return Err(Error::InvalidArgument("width and height must be positive".into()).into());
    }
    let sigma = sigma_arg(&a.gt_sigma)?;
    let samples = read_gaze_csv(&a.gaze)?;
    let mut summary = String::from("subject_id,samples,retained,insufficient\n");
    let mut filtered = Vec::new();
    for t in group_traces(samples)? {
        let out = filter_saccades(&t);
        summary.push_str(&format!(
            "{},{},{},{}\n",
            t.subject_id(),
            t.samples().len(),
            out.trace.retained_count(),
            out.insufficient_samples
        ));
        filtered.push(out.trace);
    }
    let filter = SphericalGaussian::new(a.width, a.height, sigma)?;
    let mut maps = Vec::new();
    for (frame, fix) in fixation_maps(&filtered, a.width, a.height) {
        let gt = ground_truth_with(&fix, &filter)?;
        let name = format!("gt_{}", stem(frame));
        write_map(&a.out.join("maps").join(format!("{name}.vbfm")), &gt)?;
        write_atomic(&a.out.join("heatmaps").join(format!("{name}.png")), &render_heatmap(&gt, None)?)?;
        maps.push(gt);
    }
    if !maps.is_empty() {
        let packed = packed_saliency(&maps)?;
        write_map(&a.out.join("maps").join("gt_packed.vbfm"), &packed)?;
        write_atomic(&a.out.join("heatmaps").join("gt_packed.png"), &render_heatmap(&packed, None)?)?;
    }
    write_atomic(&a.out.join("reports").join("gaze_filter.csv"), summary.as_bytes())?;
    Ok(())
}

fn targets(a: TargetsArgs) -> Result<()> {
    let mut out = String::new();
    for c in generate_targets(a.n)? {
        out.push_str(&format!("{},{}\n", c.phi(), c.theta()));
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}
