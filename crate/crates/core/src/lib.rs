//! Saliency prediction for augmented 360° (equirectangular) video.
//!
//! The prediction pipeline decomposes each panorama into perspective
//! viewport blocks centered on a Fibonacci lattice, extracts spatial and
//! temporal feature maps per block, reweights blocks that overlap augmented
//! content, and blends the blocks back into the panorama with weights taken
//! from the equilibrium distribution of a Markov chain over block centers.
//!
//! Companion modules turn gaze logs into ground-truth maps and score
//! predictions with AUC-Judd, NSS, KL divergence and CC.

pub mod augmentation;
pub mod error;
pub mod features;
pub mod fusion;
pub mod gaze;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod sphere;

pub use error::{Error, Result};
pub use sphere::{
    BlockFeatureMap, BlockImage, EquirectMap, Frame, SphereCoord, ViewportSpec,
};
