//! Surfel store, sampler statistics and the neighbourhood graph.

mod export;
mod graph;
mod snapshot;
mod stats;
mod surfel;

pub use export::{
    decode_ply, encode_map_stats, encode_ply, read_map_stats, read_ply, write_map_stats, write_ply, MapPoint, SurfelStatsRow,
    NO_LABEL,
};
pub use graph::{knn_query, GraphConfig, GraphDistance, Neighbor, NeighborGraph, SpatialGrid};
pub use snapshot::{MapSnapshot, SurfelEstimate, COVARIANCE_FLOOR};
pub use stats::{ObservationSums, SampleStats, TopLabels, WorldObservation, TRACKED_LABELS};
pub use surfel::{mrf_potential, planarity_energy, Surfel, SurfelId, SurfelMap, SurfelSeed};
