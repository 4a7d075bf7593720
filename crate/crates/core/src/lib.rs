//! Direction-aware semi-dense RGB-D SLAM.
//!
//! A surfel map is inferred jointly with a nonparametric directional
//! segmentation by Gibbs sampling, while the camera is tracked by an
//! incremental ICP that selects observations to bound the pose entropy.

mod error;
pub mod fsutil;
pub mod eval;
pub mod frontend;
pub mod gibbs;
pub mod map;
pub mod math;
pub mod pipeline;
pub mod segmentation;
pub mod tracking;

pub use error::{Error, Result};
