use std::f64::consts::PI;

use vbas_core::features::{
    external_path, optical_flow, spatial_saliency, FeatureKind, FeatureSource,
};
use vbas_core::io::{read_feature_map, FeatureMapFile, FeaturePayload};
use vbas_core::pipeline::{Pipeline, PipelineConfig};
use vbas_core::sphere::{geodesic_distance, BlockSampler};
use vbas_core::{Frame, SphereCoord};

#[test]
fn header_layout_is_little_endian() {
    let file = FeatureMapFile::new(3, 2, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.5]).unwrap();
    let bytes = file.encode();
    assert_eq!(&bytes[0..4], b"VBFM");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 3);
    assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 1);
    assert_eq!(bytes.len(), 18 + 6 * 4);
    assert_eq!(f32::from_le_bytes(bytes[38..42].try_into().unwrap()), 5.5);
    assert_eq!(FeatureMapFile::decode(&bytes).unwrap(), file);
}

#[test]
fn flow_files_interleave_channels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.vbfm");
    FeatureMapFile::flow(2, 1, &[1.0, 2.0], &[-1.0, -2.0]).unwrap().write(&path).unwrap();
    let raw = FeatureMapFile::read(&path).unwrap();
    assert_eq!(raw.data, vec![1.0, -1.0, 2.0, -2.0]);
    match read_feature_map(&path).unwrap() {
        FeaturePayload::Flow { u, v, .. } => {
            assert_eq!(u, vec![1.0, 2.0]);
            assert_eq!(v, vec![-1.0, -2.0]);
        }
        other => panic!("expected flow, got {other:?}"),
    }
}

#[test]
fn corrupt_files_are_rejected() {
    let good = FeatureMapFile::scalar(2, 2, &[0.0; 4]).unwrap().encode();
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    assert!(FeatureMapFile::decode(&bad_magic).is_err());
    assert!(FeatureMapFile::decode(&good[..good.len() - 1]).is_err());
    let mut nan = good.clone();
    nan[18..22].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(FeatureMapFile::decode(&nan).is_err());
}

#[test]
fn external_paths_follow_directory_layout() {
    let root = std::path::Path::new("/feat");
    assert_eq!(external_path(root, FeatureKind::Spatial, 10, 3), root.join("spatial/f10_b3.vbfm"));
    assert_eq!(external_path(root, FeatureKind::Flow, 0, 63), root.join("flow/f0_b63.vbfm"));
}

fn disk_frame(t: usize) -> Frame {
    let center = SphereCoord::new(PI / 2.0, 1.0 + (t as f64).to_radians()).unwrap();
    Frame::from_fn(256, 128, |c| {
        if geodesic_distance(&c, &center) < 8f64.to_radians() {
            [250, 240, 230]
        } else {
            [90, 100, 110]
        }
    })
}

#[test]
fn exported_builtin_features_reproduce_builtin_run() {
    let (w, h) = (256, 128);
    let builtin = PipelineConfig {
        n_targets: 16,
        block_resolution: 32,
        diagnostics: true,
        ..PipelineConfig::default()
    };
    let pipeline = Pipeline::new(builtin.clone(), w, h).unwrap();
    let (prev, cur) = (disk_frame(0), disk_frame(5));
    let reference = pipeline.run_frame(5, &cur, Some(&prev), None).unwrap();

    let dir = tempfile::tempdir().unwrap();
    for (b, spec) in pipeline.viewports().iter().enumerate() {
        let sampler = BlockSampler::new(*spec, w, h);
        let (pb, cb) = (sampler.extract(&prev), sampler.extract(&cur));
        let spatial = spatial_saliency(&cb);
        let path = external_path(dir.path(), FeatureKind::Spatial, 5, b);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        FeatureMapFile::scalar(32, 32, spatial.values()).unwrap().write(&path).unwrap();
        let flow = optical_flow(&pb, &cb, &builtin.flow).unwrap();
        let path = external_path(dir.path(), FeatureKind::Flow, 5, b);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        FeatureMapFile::flow(32, 32, flow.u(), flow.v()).unwrap().write(&path).unwrap();
        assert!(read_feature_map(&path).is_ok());
    }

    let external = PipelineConfig {
        spatial_source: FeatureSource::ExternalFile(dir.path().to_path_buf()),
        flow_source: FeatureSource::ExternalFile(dir.path().to_path_buf()),
        ..builtin
    };
    let swapped = Pipeline::new(external, w, h).unwrap().run_frame(5, &cur, Some(&prev), None).unwrap();
    let (a, b) = (reference.diagnostics.unwrap(), swapped.diagnostics.unwrap());
    assert_eq!(a.blocks.len(), b.blocks.len());
    assert_eq!(a.blocks_csv().lines().next(), b.blocks_csv().lines().next());
    let worst = reference
        .prediction
        .values()
        .iter()
        .zip(swapped.prediction.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "prediction moved by {worst}");
}

#[test]
fn missing_or_misshapen_external_maps_fail() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig {
        n_targets: 4,
        block_resolution: 16,
        spatial_source: FeatureSource::ExternalFile(dir.path().to_path_buf()),
        ..PipelineConfig::default()
    };
    let pipeline = Pipeline::new(config, 64, 32).unwrap();
    let frame = Frame::from_fn(64, 32, |_| [0, 0, 0]);
    assert!(pipeline.run_frame(0, &frame, None, None).is_err());

    for b in 0..4 {
        let path = external_path(dir.path(), FeatureKind::Spatial, 0, b);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        FeatureMapFile::scalar(8, 8, &[0.5; 64]).unwrap().write(&path).unwrap();
    }
    assert!(pipeline.run_frame(0, &frame, None, None).is_err());
}
