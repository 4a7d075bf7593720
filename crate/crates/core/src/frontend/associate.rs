use serde::{Deserialize, Serialize};

use super::{observe_pixel, point_jacobian, Association, DepthNoiseModel, Frame, Image, ObservationBatch};
use crate::map::{MapSnapshot, SurfelEstimate, SurfelId};
use crate::math::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    /// Gate on the depth residual in standard deviations.
    pub mahalanobis_gate: f64,
    /// Maximum angle between surfel and observed normal (degrees).
    pub normal_gate_deg: f64,
    /// Half window of the normal estimator.
    pub half_window: usize,
    /// Minimum projected footprint radius counted as covered (pixels).
    pub min_cover_px: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            mahalanobis_gate: 3.0,
            normal_gate_deg: 45.0,
            half_window: 2,
            min_cover_px: 3.0,
        }
    }
}

/// Why a surfel was not associated in a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PruneReason {
    Behind,
    BackFacing,
    /// Observed depth lies in front of the surfel.
    Occluded,
    /// Observed depth lies behind the surfel.
    FreeSpace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Visibility {
    OutOfView,
    NoMeasurement,
    Pruned(PruneReason),
    /// Depth residual in standard deviations and the pixel.
    Consistent { residual: f64, pixel: (usize, usize) },
}

/// Depth residual of a surfel against the pixel it projects to.
pub fn classify(
    est: &SurfelEstimate,
    frame: &Frame,
    pose: &Pose,
    noise: &DepthNoiseModel,
    config: &AssociationConfig,
) -> Visibility {
    let t = &pose.transform;
    let q = t.inverse_transform_point(&est.position);
    if q.z <= 0.0 {
        return Visibility::Pruned(PruneReason::Behind);
    }
    let k = &frame.intrinsics;
    let Some(pixel) = k.project(&q).and_then(|uv| k.nearest_pixel(&uv)) else {
        return Visibility::OutOfView;
    };
    let n = t.rotation.inverse() * est.normal.into_inner();
    if n.dot(&q) >= 0.0 {
        return Visibility::Pruned(PruneReason::BackFacing);
    }
    let Some(z_obs) = frame.depth_at(pixel.0, pixel.1) else {
        return Visibility::NoMeasurement;
    };
    let ray = k.ray(pixel.0 as f64, pixel.1 as f64);
    let denom = n.dot(&ray);
    let z_pred = if denom.abs() < 1e-6 { q.z } else { n.dot(&q) / denom };
    let r = t.rotation_matrix();
    let j = point_jacobian(&q);
    let cov = r.transpose() * est.covariance * r + j * pose.covariance * j.transpose();
    let plane_var = (n.transpose() * cov * n)[(0, 0)] / denom.abs().max(1e-6).powi(2);
    let sigma = (noise.axial_sigma(z_obs).powi(2) + plane_var).sqrt();
    let m = (z_obs - z_pred) / sigma;
    if m < -config.mahalanobis_gate {
        Visibility::Pruned(PruneReason::Occluded)
    } else if m > config.mahalanobis_gate {
        Visibility::Pruned(PruneReason::FreeSpace)
    } else {
        Visibility::Consistent { residual: m, pixel }
    }
}

/// Projective association of a snapshot against a frame.
#[derive(Clone, Debug)]
pub struct AssociationResult {
    pub batch: ObservationBatch,
    pub pruned: Vec<(SurfelId, PruneReason)>,
    /// Pixels inside the footprint of an associated surfel.
    pub coverage: Image<bool>,
}

pub fn associate(
    snapshot: &MapSnapshot,
    frame: &Frame,
    pose: &Pose,
    noise: &DepthNoiseModel,
    config: &AssociationConfig,
) -> AssociationResult {
    let mut batch = Vec::new();
    let mut pruned = Vec::new();
    let mut coverage = Image::filled(frame.width(), frame.height(), false);
    let cos_gate = config.normal_gate_deg.to_radians().cos();
    let focal = frame.intrinsics.mean_focal();
    for est in &snapshot.surfels {
        match classify(est, frame, pose, noise, config) {
            Visibility::Pruned(reason) => pruned.push((est.id, reason)),
            Visibility::Consistent { pixel, .. } => {
                let Some(obs) = observe_pixel(frame, pixel.0, pixel.1, noise, config.half_window) else {
                    continue;
                };
                let n_cam = pose.transform.rotation.inverse() * est.normal.into_inner();
                if obs.normal.dot(&n_cam) < cos_gate {
                    continue;
                }
                let radius_px = (est.radius * focal / obs.point.z).max(config.min_cover_px);
                mark_disc(&mut coverage, pixel, radius_px);
                batch.push(Association {
                    surfel: est.id,
                    observation: obs,
                });
            }
            _ => {}
        }
    }
    AssociationResult {
        batch,
        pruned,
        coverage,
    }
}

/// Surfels that may not be associated in this frame, with the reason.
pub fn prune_surfels(
    snapshot: &MapSnapshot,
    frame: &Frame,
    pose: &Pose,
    noise: &DepthNoiseModel,
    config: &AssociationConfig,
) -> Vec<(SurfelId, PruneReason)> {
    snapshot
        .surfels
        .iter()
        .filter_map(|est| match classify(est, frame, pose, noise, config) {
            Visibility::Pruned(reason) => Some((est.id, reason)),
            _ => None,
        })
        .collect()
}

pub(crate) fn mark_disc(img: &mut Image<bool>, centre: (usize, usize), radius: f64) {
    let r = radius.max(0.0);
    let ri = r.floor() as isize;
    let (cu, cv) = (centre.0 as isize, centre.1 as isize);
    for dv in -ri..=ri {
        for du in -ri..=ri {
            if ((du * du + dv * dv) as f64) > r * r {
                continue;
            }
            let (u, v) = (cu + du, cv + dv);
            if u >= 0 && v >= 0 && (u as usize) < img.width && (v as usize) < img.height {
                img.set(u as usize, v as usize, true);
            }
        }
    }
}
