//! DP-vMF directional mixture with MRF label smoothing.

mod label;
mod model;
mod prior;

pub use label::{label_conditional, label_log_weights, LabelChoice, LabelPosterior};
pub use model::{Cluster, DirectionalModel, SegmentationConfig};
pub use prior::{
    sample_categorical, tau_grid, vmf_param_posterior, PosteriorParams, VmfPrior, TAU_GRID_MAX, TAU_GRID_MIN,
    TAU_GRID_POINTS,
};

/// Index of a directional cluster.
pub type ClusterId = u32;
