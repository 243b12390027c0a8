//! Per-block spatial and temporal feature maps.
//!
//! The built-in extractors are classical stand-ins for learned networks:
//! multi-scale center-surround contrast for spatial conspicuity and a
//! variational flow solver for motion. Externally computed maps can be
//! loaded through [`FeatureSource::ExternalFile`] instead.

mod blur;
mod flow;
mod source;
mod spatial;
mod temporal;

pub use blur::gaussian_blur;
pub use flow::{flow_energy, optical_flow, optical_flow_traced, FlowField, FlowParams, FlowSolution};
pub use source::{external_path, load_external_flow, load_external_spatial, FeatureKind, FeatureSource};
pub use spatial::spatial_saliency;
pub use temporal::{temporal_saliency, DEFAULT_TEMPORAL_SIGMA_PX};
