use nalgebra::{Matrix3, Vector3};

use super::{Surfel, SurfelId};
use crate::math::{Gaussian3, UnitVec3};
use crate::segmentation::ClusterId;

/// Eigenvalue floor applied to published covariances.
pub const COVARIANCE_FLOOR: f64 = 1e-12;

/// Published, read-only estimate of one surfel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfelEstimate {
    pub id: SurfelId,
    pub position: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub normal: UnitVec3,
    pub label: ClusterId,
    pub intensity: f64,
    pub rgb: [u8; 3],
    pub radius: f64,
    pub gradient: f64,
    /// `½ ln((2πe)³ |Σ̄|)`.
    pub entropy: f64,
    pub samples: u32,
    pub observations: u32,
}

impl SurfelEstimate {
    /// Sample-based estimate once `min_samples` post-burn-in samples exist,
    /// the initial observation otherwise.
    pub fn from_surfel(s: &Surfel, min_samples: u32) -> Self {
        let stats = &s.samples;
        let (position, covariance, normal, label) = if stats.count >= min_samples && stats.count > 0 {
            (
                stats.mean_position().expect("count > 0"),
                stats.position_covariance().expect("count > 0"),
                stats.mean_normal().unwrap_or(s.normal),
                stats.labels.most_likely().unwrap_or(s.label),
            )
        } else {
            (s.initial_position, s.initial_covariance, s.initial_normal, s.label)
        };
        let entropy = Gaussian3::new(position, covariance).entropy(COVARIANCE_FLOOR);
        Self {
            id: s.id,
            position,
            covariance,
            normal,
            label,
            intensity: s.intensity,
            rgb: s.rgb,
            radius: s.radius,
            gradient: s.gradient,
            entropy,
            samples: stats.count,
            observations: s.observations.count,
        }
    }
}

/// Immutable versioned view of the map handed to the tracker.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapSnapshot {
    pub version: u64,
    pub surfels: Vec<SurfelEstimate>,
}

impl MapSnapshot {
    pub fn len(&self) -> usize {
        self.surfels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfels.is_empty()
    }
}
