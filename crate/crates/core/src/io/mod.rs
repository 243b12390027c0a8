//! File formats and directory conventions.

pub mod atomic;
pub mod config;
pub mod featfile;
pub mod frames;
pub mod gaze_csv;
pub mod heatmap;
pub mod manifest;
pub mod maps;

pub use atomic::write_atomic;
pub use config::{apply_setting, config_to_text, parse_config_text, read_config};
pub use featfile::{read_feature_map, FeatureMapFile, FeaturePayload};
pub use frames::{frame_path, mask_path, read_frame_png, read_mask_png, write_frame_png, DirectoryFrames};
pub use gaze_csv::{read_gaze_csv, write_gaze_csv};
pub use heatmap::render_heatmap;
pub use manifest::{sha256_file, RunManifest};
pub use maps::{read_map, write_map};
