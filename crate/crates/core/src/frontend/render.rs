use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{DepthNoiseModel, Frame, Image, Intrinsics, SyntheticScene};
use crate::math::Se3;

/// Surface / segment id of pixels that hit nothing.
pub const BACKGROUND: i32 = -1;

/// Axial depth noise drawn from a noise model with a fixed seed.
#[derive(Clone, Copy, Debug)]
pub struct RenderNoise {
    pub model: DepthNoiseModel,
    pub seed: u64,
}

/// A rendered frame with per-pixel ground truth.
#[derive(Clone, Debug)]
pub struct RenderedFrame {
    pub frame: Frame,
    pub pose: Se3,
    /// Index into `scene.patches`, or [`BACKGROUND`].
    pub surface: Image<i32>,
    pub segment: Image<i32>,
    /// Noise-free depth.
    pub true_depth: Image<f32>,
}

impl RenderedFrame {
    /// World-frame normal of the surface seen at a pixel.
    pub fn true_normal(&self, scene: &SyntheticScene, u: usize, v: usize) -> Option<Vector3<f64>> {
        let s = self.surface.get(u, v);
        (s >= 0).then(|| scene.patches[s as usize].normal.into_inner())
    }
}

fn row_seed(seed: u64, row: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (row as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Ray-casts `scene` from camera-to-world `pose`.
pub fn render_synthetic(
    scene: &SyntheticScene,
    pose: &Se3,
    intrinsics: &Intrinsics,
    noise: Option<RenderNoise>,
    timestamp: f64,
) -> RenderedFrame {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let r = pose.rotation_matrix();
    let eye = pose.translation;
    let rows: Vec<Vec<(f32, f32, f32, i32, i32)>> = (0..h)
        .into_par_iter()
        .map(|v| {
            let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(row_seed(n.seed, v)));
            (0..w)
                .map(|u| {
                    // camera-frame ray has unit z, so the hit parameter is the depth
                    let dir = r * intrinsics.ray(u as f64, v as f64);
                    let mut best: Option<(f64, usize)> = None;
                    for (i, patch) in scene.patches.iter().enumerate() {
                        if let Some(t) = patch.intersect(&eye, &dir) {
                            if best.is_none_or(|(bt, _)| t < bt) {
                                best = Some((t, i));
                            }
                        }
                    }
                    let Some((z, i)) = best else {
                        return (0.0, 0.0, 0.0, BACKGROUND, BACKGROUND);
                    };
                    let patch = &scene.patches[i];
                    let intensity = patch.intensity_at(&(eye + dir * z));
                    let noisy = match (noise, rng.as_mut()) {
                        (Some(n), Some(rng)) => {
                            let e: f64 = StandardNormal.sample(rng);
                            z + n.model.axial_sigma(z) * e
                        }
                        _ => z,
                    };
                    (noisy as f32, z as f32, intensity as f32, i as i32, patch.segment as i32)
                })
                .collect()
        })
        .collect();
    let mut depth = Image::filled(w, h, 0.0f32);
    let mut true_depth = Image::filled(w, h, 0.0f32);
    let mut intensity = Image::filled(w, h, 0.0f32);
    let mut surface = Image::filled(w, h, BACKGROUND);
    let mut segment = Image::filled(w, h, BACKGROUND);
    for (v, row) in rows.into_iter().enumerate() {
        for (u, (d, td, i, s, g)) in row.into_iter().enumerate() {
            depth.set(u, v, d);
            true_depth.set(u, v, td);
            intensity.set(u, v, i);
            surface.set(u, v, s);
            segment.set(u, v, g);
        }
    }
    let rgb = Image {
        width: w,
        height: h,
        data: intensity
            .data
            .iter()
            .map(|&i| {
                let c = (i.clamp(0.0, 1.0) * 255.0).round() as u8;
                [c, c, c]
            })
            .collect(),
    };
    let frame = Frame::new(timestamp, *intrinsics, intensity, depth, Some(rgb));
    RenderedFrame {
        frame,
        pose: *pose,
        surface,
        segment,
        true_depth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{estimate_normal, Patch, Texture, TrajectorySpec};
    use approx::assert_relative_eq;

    fn small() -> Intrinsics {
        Intrinsics {
            fx: 200.0,
            fy: 200.0,
            cx: 79.5,
            cy: 59.5,
            width: 160,
            height: 120,
        }
    }

    fn wall_scene(z: f64) -> SyntheticScene {
        let mut s = SyntheticScene::new(
            small(),
            TrajectorySpec::Static {
                eye: Vector3::zeros(),
                target: Vector3::z(),
            },
        );
        s.add_patch(Patch::new(
            Vector3::new(0.0, 0.0, z),
            -Vector3::z(),
            (20.0, 20.0),
            Texture::Checker(0.1),
            0,
        ));
        s
    }

    #[test]
    fn frontal_wall_has_constant_depth() {
        let s = wall_scene(2.0);
        let f = render_synthetic(&s, &Se3::identity(), &small(), None, 0.0);
        assert!(f.frame.depth.data.iter().all(|&d| (d - 2.0).abs() < 1e-6));
        assert!(f.surface.data.iter().all(|&i| i == 0));
        let n = estimate_normal(&f.frame, 80, 60, 2).unwrap();
        assert_relative_eq!(n.normal.into_inner(), -Vector3::z(), epsilon = 1e-6);
    }

    #[test]
    fn noise_matches_axial_sigma() {
        let s = wall_scene(2.0);
        let model = DepthNoiseModel::default();
        let f = render_synthetic(&s, &Se3::identity(), &small(), Some(RenderNoise { model, seed: 4 }), 0.0);
        let res: Vec<f64> = f.frame.depth.data.iter().map(|&d| d as f64 - 2.0).collect();
        let n = res.len() as f64;
        let mean = res.iter().sum::<f64>() / n;
        let std = (res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let expected = model.axial_sigma(2.0);
        assert!((std / expected - 1.0).abs() < 0.1, "{std} vs {expected}");
    }

    #[test]
    fn translated_pose_matches_plane_intersection() {
        let mut s = wall_scene(2.0);
        s.patches[0] = Patch::new(
            Vector3::new(0.0, 0.0, 2.0),
            Vector3::new(0.3, 0.0, -1.0),
            (20.0, 20.0),
            Texture::Constant(0.5),
            0,
        );
        let pose = Se3::from_translation(Vector3::new(0.1, 0.0, 0.0));
        let k = small();
        let f = render_synthetic(&s, &pose, &k, None, 0.0);
        let n = s.patches[0].normal.into_inner();
        for (u, v) in [(0, 0), (80, 60), (159, 119), (30, 100)] {
            let ray = k.ray(u as f64, v as f64);
            let z = n.dot(&(s.patches[0].origin - pose.translation)) / n.dot(&ray);
            assert_relative_eq!(f.frame.depth.get(u, v) as f64, z, epsilon = 1e-5);
        }
    }

    #[test]
    fn inclined_plane_normal_within_half_degree() {
        let mut s = wall_scene(2.0);
        let true_n = Vector3::new(1.0, 0.0, -1.0).normalize();
        s.patches[0] = Patch::new(Vector3::new(0.0, 0.0, 2.0), true_n, (20.0, 20.0), Texture::Constant(0.5), 0);
        let f = render_synthetic(&s, &Se3::identity(), &small(), None, 0.0);
        for (u, v) in [(40, 30), (80, 60), (120, 90)] {
            let est = estimate_normal(&f.frame, u, v, 2).unwrap();
            let ang = est.normal.dot(&true_n).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(ang < 0.5, "{ang}");
        }
    }

    #[test]
    fn discontinuity_is_flagged_or_near_surface() {
        let mut s = wall_scene(2.0);
        s.add_patch(Patch::new(
            Vector3::new(-1.0, 0.0, 1.0),
            -Vector3::z(),
            (2.0, 4.0),
            Texture::Constant(0.5),
            1,
        ));
        let f = render_synthetic(&s, &Se3::identity(), &small(), None, 0.0);
        let edge_u = (0..159)
            .find(|&u| f.surface.get(u, 60) != f.surface.get(u + 1, 60))
            .unwrap();
        for u in edge_u.saturating_sub(2)..=edge_u + 3 {
            if let Some(est) = estimate_normal(&f.frame, u, 60, 2) {
                let ang = est.normal.dot(&-Vector3::z()).clamp(-1.0, 1.0).acos().to_degrees();
                assert!(ang < 20.0 || est.straddles_edge);
            }
        }
    }
}
