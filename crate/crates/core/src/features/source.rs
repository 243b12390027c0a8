use std::path::{Path, PathBuf};

use super::flow::FlowField;
use crate::error::{Error, Result};
use crate::io::featfile::{read_feature_map, FeaturePayload};
use crate::sphere::{BlockFeatureMap, ViewportSpec};

/// Where a pipeline stage takes its per-block features from.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSource {
    BuiltinSpatial,
    BuiltinFlow,
    /// Root directory holding `spatial/` and `flow/` subdirectories of
    /// feature-map files named `f{frame}_b{block}.vbfm`.
    ExternalFile(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Spatial,
    Flow,
}

impl FeatureKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            FeatureKind::Spatial => "spatial",
            FeatureKind::Flow => "flow",
        }
    }
}

pub fn external_path(root: &Path, kind: FeatureKind, frame: usize, block: usize) -> PathBuf {
    root.join(kind.dir_name()).join(format!("f{frame}_b{block}.vbfm"))
}

fn check_size(path: &Path, spec: &ViewportSpec, width: usize, height: usize) -> Result<()> {
    let r = spec.resolution();
    if width != r || height != r {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("feature map is {width}x{height}, blocks are {r}x{r}"),
        });
    }
    Ok(())
}

/// Loads an externally computed spatial map for one block.
pub fn load_external_spatial(root: &Path, frame: usize, block: usize, spec: &ViewportSpec) -> Result<BlockFeatureMap> {
    let path = external_path(root, FeatureKind::Spatial, frame, block);
    match read_feature_map(&path)? {
        FeaturePayload::Scalar { width, height, values } => {
            check_size(&path, spec, width, height)?;
            let values = values.into_iter().map(|v| (v as f64).max(0.0)).collect();
            BlockFeatureMap::new(*spec, values)
        }
        FeaturePayload::Flow { .. } => Err(Error::TypeMismatch {
            expected: "1-channel feature map".into(),
            found: "2-channel flow field".into(),
        }),
    }
}

/// Loads an externally computed flow field for one block.
pub fn load_external_flow(root: &Path, frame: usize, block: usize, spec: &ViewportSpec) -> Result<FlowField> {
    let path = external_path(root, FeatureKind::Flow, frame, block);
    match read_feature_map(&path)? {
        FeaturePayload::Flow { width, height, u, v } => {
            check_size(&path, spec, width, height)?;
            FlowField::new(
                *spec,
                u.into_iter().map(f64::from).collect(),
                v.into_iter().map(f64::from).collect(),
            )
        }
        FeaturePayload::Scalar { .. } => Err(Error::TypeMismatch {
            expected: "2-channel flow field".into(),
            found: "1-channel feature map".into(),
        }),
    }
}
