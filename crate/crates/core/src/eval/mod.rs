//! Trajectory and segmentation evaluation against ground truth.

mod ate;
mod segmentation;

pub use ate::{align_rigid, evaluate_ate, TrajectoryReport};
pub use segmentation::{evaluate_segmentation, SegmentationReport, HUNGARIAN_LIMIT};
