use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SyntheticScene;
use crate::math::UnitVec3;

/// Maximum angle between a point normal and a plane normal for an inlier.
pub const NORMAL_AGREEMENT_DEG: f64 = 30.0;

/// How candidate planes are drawn from the cloud.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneSampling {
    /// Each plane from a random point not yet explained by earlier planes.
    #[default]
    Unexplained,
    /// Each plane from a uniformly random point.
    Uniform,
}

/// Mean inlier fraction for each plane count, over `trials` nested draws.
pub fn plane_sparsity_experiment<R: Rng + ?Sized>(
    cloud: &[(Vector3<f64>, UnitVec3)],
    plane_counts: &[usize],
    threshold: f64,
    trials: usize,
    sampling: PlaneSampling,
    rng: &mut R,
) -> Vec<(usize, f64)> {
    let max_p = plane_counts.iter().copied().max().unwrap_or(0);
    let mut sums = vec![0.0; max_p + 1];
    if cloud.is_empty() || trials == 0 {
        return plane_counts.iter().map(|&p| (p, 0.0)).collect();
    }
    let cos_gate = NORMAL_AGREEMENT_DEG.to_radians().cos();
    let n = cloud.len();
    for _ in 0..trials {
        let mut explained = vec![false; n];
        let mut count = 0usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut cursor = 0;
        for p in 1..=max_p {
            let seed = match sampling {
                PlaneSampling::Uniform => Some(order[(p - 1) % n]),
                PlaneSampling::Unexplained => {
                    while cursor < n && explained[order[cursor]] {
                        cursor += 1;
                    }
                    (cursor < n).then(|| order[cursor])
                }
            };
            if let Some(s) = seed {
                let (origin, normal) = cloud[s];
                for (i, (x, nx)) in cloud.iter().enumerate() {
                    if !explained[i]
                        && normal.dot(&(x - origin)).abs() < threshold
                        && normal.dot(nx).abs() > cos_gate
                    {
                        explained[i] = true;
                        count += 1;
                    }
                }
            }
            sums[p] += count as f64 / n as f64;
        }
    }
    plane_counts
        .iter()
        .map(|&p| (p, if p == 0 { 0.0 } else { sums[p] / trials as f64 }))
        .collect()
}

/// Points sampled uniformly by area over the scene's surfaces.
pub fn sample_scene_cloud<R: Rng + ?Sized>(
    scene: &SyntheticScene,
    count: usize,
    rng: &mut R,
) -> Vec<(Vector3<f64>, UnitVec3)> {
    let areas: Vec<f64> = scene.patches.iter().map(|p| p.area()).collect();
    let total: f64 = areas.iter().sum();
    let mut out = Vec::with_capacity(count);
    if total <= 0.0 {
        return out;
    }
    let dist = rand::distr::weighted::WeightedIndex::new(&areas).expect("positive areas");
    for _ in 0..count {
        let patch = &scene.patches[rng.sample(&dist)];
        let s = rng.random_range(-patch.half_extent.0..=patch.half_extent.0);
        let t = rng.random_range(-patch.half_extent.1..=patch.half_extent.1);
        out.push((patch.origin + patch.u_axis * s + patch.v_axis * t, patch.normal));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{Intrinsics, Patch, Texture, TrajectorySpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn room(planes: usize) -> SyntheticScene {
        let mut s = SyntheticScene::new(
            Intrinsics::vga(),
            TrajectorySpec::Static {
                eye: Vector3::new(0.0, 0.0, 1.0),
                target: Vector3::new(1.0, 0.0, 1.0),
            },
        );
        let t = Texture::Constant(0.5);
        let base = [
            (Vector3::new(0.0, 0.0, 0.0), Vector3::z(), (4.0, 4.0)),
            (Vector3::new(0.0, 0.0, 2.5), -Vector3::z(), (4.0, 4.0)),
            (Vector3::new(2.0, 0.0, 1.25), -Vector3::x(), (4.0, 2.5)),
            (Vector3::new(-2.0, 0.0, 1.25), Vector3::x(), (4.0, 2.5)),
            (Vector3::new(0.0, 2.0, 1.25), -Vector3::y(), (4.0, 2.5)),
            (Vector3::new(0.0, -2.0, 1.25), Vector3::y(), (4.0, 2.5)),
            (Vector3::new(0.5, 0.5, 0.75), Vector3::z(), (1.0, 0.6)),
            (Vector3::new(-1.0, -1.0, 0.45), Vector3::z(), (0.5, 0.5)),
            (Vector3::new(1.2, -1.2, 1.0), Vector3::new(1.0, 1.0, 0.0), (0.8, 1.0)),
            (Vector3::new(-1.2, 1.2, 1.1), Vector3::new(1.0, -1.0, 0.3), (0.8, 0.8)),
        ];
        for (i, (o, n, e)) in base.into_iter().take(planes).enumerate() {
            s.add_patch(Patch::new(o, n, e, t, i as u32));
        }
        s
    }

    #[test]
    fn single_plane_is_fully_explained() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloud = sample_scene_cloud(&room(1), 2000, &mut rng);
        let curve = plane_sparsity_experiment(&cloud, &[1], 0.02, 5, PlaneSampling::Uniform, &mut rng);
        assert!((curve[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cloud = sample_scene_cloud(&room(10), 5000, &mut rng);
        for sampling in [PlaneSampling::Uniform, PlaneSampling::Unexplained] {
            let counts: Vec<usize> = (1..=20).collect();
            let curve = plane_sparsity_experiment(&cloud, &counts, 0.02, 20, sampling, &mut rng);
            for w in curve.windows(2) {
                assert!(w[1].1 >= w[0].1, "{sampling:?}: {w:?}");
            }
        }
    }

    #[test]
    fn ten_plane_room_needs_ten_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = sample_scene_cloud(&room(10), 5000, &mut rng);
        let curve = plane_sparsity_experiment(&cloud, &[10], 0.02, 20, PlaneSampling::Unexplained, &mut rng);
        assert!(curve[0].1 >= 0.9, "{}", curve[0].1);
    }
}
