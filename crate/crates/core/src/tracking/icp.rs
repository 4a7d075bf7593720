use std::time::Instant;

use nalgebra::Matrix6;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{icp_residual_jacobian, IcpRows, IcpWorkspace, SegmentQueues, Selection, TrackingConfig};
use crate::frontend::{classify, estimate_normal, AssociationConfig, DepthNoiseModel, Frame, Visibility};
use crate::map::MapSnapshot;
use crate::math::{Pose, Se3};

/// Per-frame tracking diagnostics, one JSON line per frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackDiagnostics {
    pub timestamp: f64,
    pub elapsed_ms: f64,
    pub iterations: usize,
    /// Surfels selected in the last Gauss–Newton iteration at full resolution.
    pub selected: usize,
    /// `None` when JᵀJ is singular.
    pub entropy_bound: Option<f64>,
    pub lambda_min: f64,
    pub candidates: usize,
    pub segments: usize,
    pub thresholds_met: bool,
    pub lost: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackResult {
    /// Camera-to-world pose with covariance `(JᵀJ)⁻¹` in the tangent space.
    pub pose: Pose,
    pub diagnostics: TrackDiagnostics,
}

struct Problem<'a> {
    snapshot: &'a MapSnapshot,
    noise: &'a DepthNoiseModel,
    association: &'a AssociationConfig,
    config: &'a TrackingConfig,
    queues: &'a SegmentQueues,
}

impl Problem<'_> {
    fn rows(&self, frame: &Frame, pose: &Se3, index: usize, pixel: (usize, usize)) -> Option<IcpRows> {
        let x = frame.point_at(pixel.0, pixel.1)?;
        let cov = self.noise.covariance(&x, frame.intrinsics.mean_focal());
        Some(icp_residual_jacobian(
            &self.snapshot.surfels[index],
            &x,
            &cov,
            frame,
            pose,
            self.config,
        ))
    }

    /// Selects surfels round robin until the information thresholds hold, the
    /// budget is spent or the queues run dry.
    fn accumulate(&self, frame: &Frame, pose: &Se3) -> (IcpWorkspace, Vec<usize>) {
        let gate_pose = Pose::new(*pose, Matrix6::zeros());
        let mut ws = IcpWorkspace::default();
        let mut selected = Vec::new();
        let mut rr = self.queues.round_robin();
        while ws.selected < self.config.budget {
            let mut pixel = (0, 0);
            let next = rr.next_valid(|i| {
                match classify(&self.snapshot.surfels[i], frame, &gate_pose, self.noise, self.association) {
                    Visibility::Consistent { pixel: p, .. } => {
                        pixel = p;
                        self.normal_agrees(frame, pose, i, p)
                    }
                    _ => false,
                }
            });
            let Some(i) = next else { break };
            let Some(rows) = self.rows(frame, pose, i, pixel) else { continue };
            ws.add_rows(&rows);
            selected.push(i);
            if ws.thresholds_met(self.config) {
                break;
            }
        }
        (ws, selected)
    }

    /// The window around `pixel` lies on one surface whose normal is within
    /// the association normal gate of the surfel normal.
    fn normal_agrees(&self, frame: &Frame, pose: &Se3, index: usize, pixel: (usize, usize)) -> bool {
        let Some(measured) = estimate_normal(frame, pixel.0, pixel.1, self.association.half_window) else {
            return false;
        };
        if measured.straddles_edge {
            return false;
        }
        let n_cam = pose.rotation.inverse() * self.snapshot.surfels[index].normal.into_inner();
        measured.normal.dot(&n_cam) >= self.association.normal_gate_deg.to_radians().cos()
    }

    fn cost(&self, frame: &Frame, pose: &Se3, index: usize) -> Option<f64> {
        let k = &frame.intrinsics;
        let q = pose.inverse_transform_point(&self.snapshot.surfels[index].position);
        let pixel = k.project(&q).and_then(|uv| k.nearest_pixel(&uv))?;
        self.rows(frame, pose, index, pixel).map(|r| r.cost())
    }

    /// Costs of `selected` at two poses, summed over surfels valid at both.
    fn compare(&self, frame: &Frame, a: &Se3, b: &Se3, selected: &[usize]) -> (f64, f64) {
        selected
            .iter()
            .filter_map(|&i| Some((self.cost(frame, a, i)?, self.cost(frame, b, i)?)))
            .fold((0.0, 0.0), |acc, (x, y)| (acc.0 + x, acc.1 + y))
    }
}

/// Direction-aware incremental ICP of `frame` against `snapshot`, starting
/// at the camera-to-world pose `init`. Coarse-to-fine over the image
/// pyramid; each Gauss–Newton iteration rebuilds the association and
/// selection. Returns `init` flagged lost when JᵀJ stays singular.
pub fn incremental_icp<R: Rng + ?Sized>(
    frame: &Frame,
    snapshot: &MapSnapshot,
    init: &Se3,
    noise: &DepthNoiseModel,
    association: &AssociationConfig,
    config: &TrackingConfig,
    rng: &mut R,
) -> TrackResult {
    let start = Instant::now();
    let candidates = SegmentQueues::visible(snapshot, &frame.intrinsics, init);
    let queues = match config.selection {
        Selection::DirectionAware => SegmentQueues::direction_aware(snapshot, &candidates),
        Selection::Random => SegmentQueues::random(&candidates, rng),
    };
    let problem = Problem {
        snapshot,
        noise,
        association,
        config,
        queues: &queues,
    };
    let pyramid = frame.pyramid(config.pyramid_levels);
    let mut pose = *init;
    let mut iterations = 0;
    for level in pyramid.iter().rev() {
        for _ in 0..config.max_iterations {
            let (ws, selected) = problem.accumulate(level, &pose);
            let Some(step) = ws.step() else { break };
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..=config.max_halvings {
                let candidate = pose.compose(&Se3::exp(&(step * scale)));
                let (before, after) = problem.compare(level, &pose, &candidate, &selected);
                if after <= before {
                    accepted = Some(candidate);
                    break;
                }
                scale *= 0.5;
            }
            let Some(next) = accepted else { break };
            pose = next;
            iterations += 1;
            if (step * scale).norm() < config.convergence {
                break;
            }
        }
    }

    let (ws, selected) = problem.accumulate(&pyramid[0], &pose);
    let covariance = ws.covariance();
    let lost = covariance.is_none();
    let bound = ws.entropy_bound();
    let diagnostics = TrackDiagnostics {
        timestamp: frame.timestamp,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        iterations,
        selected: selected.len(),
        entropy_bound: bound.is_finite().then_some(bound),
        lambda_min: ws.lambda_min(),
        candidates: candidates.len(),
        segments: queues.segments(),
        thresholds_met: ws.thresholds_met(config),
        lost,
    };
    let pose = match covariance {
        Some(c) => Pose::new(pose, c),
        None => Pose::new(*init, Matrix6::identity()),
    };
    TrackResult { pose, diagnostics }
}
