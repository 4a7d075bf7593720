//! Sensor input: frames, synthetic rendering, normals, noise and data
//! association.

mod associate;
mod camera;
mod extract;
mod frame;
mod image;
mod noise;
mod normals;
mod observation;
mod render;
mod scene;
mod sparsity;
mod tum;

pub use associate::{associate, classify, prune_surfels, AssociationConfig, AssociationResult, PruneReason, Visibility};
pub use camera::Intrinsics;
pub use extract::extract_new_surfels;
pub use frame::{Frame, MAX_DEPTH, MIN_DEPTH};
pub use image::{BilinearSample, Image};
pub use noise::DepthNoiseModel;
pub use normals::{estimate_normal, scatter_normal, NormalEstimate, DISCONTINUITY_RATIO, MIN_WINDOW_POINTS};
pub use observation::{observe_pixel, point_jacobian, Association, CameraObservation, ObservationBatch};
pub use render::{render_synthetic, RenderNoise, RenderedFrame, BACKGROUND};
pub use scene::{look_at, Patch, SyntheticScene, Texture, TrajectorySpec};
pub use sparsity::{plane_sparsity_experiment, sample_scene_cloud, PlaneSampling, NORMAL_AGREEMENT_DEG};
pub use tum::{
    depth_from_raw, depth_to_raw, format_trajectory, nearest_timestamp, parse_trajectory, parse_tum_sequence,
    read_trajectory, write_trajectory, write_tum_sequence, TumEntry, TumSequence, DEPTH_SCALE, MAX_TIME_DIFFERENCE,
};
