use nalgebra::{Matrix3, Vector3};

use super::Frame;
use crate::math::{sorted_symmetric_eigen, UnitVec3};

/// Minimum number of valid window pixels for a normal estimate.
pub const MIN_WINDOW_POINTS: usize = 6;

/// Relative depth band around the centre pixel; pixels outside it are
/// treated as belonging to another surface.
pub const DISCONTINUITY_RATIO: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalEstimate {
    /// Camera-frame normal facing the camera.
    pub normal: UnitVec3,
    pub points: usize,
    /// Some window pixels were dropped at a depth discontinuity.
    pub straddles_edge: bool,
}

/// Scatter-matrix normal of a point set, oriented towards `viewpoint`.
pub fn scatter_normal(points: &[Vector3<f64>], viewpoint: &Vector3<f64>) -> Option<UnitVec3> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let scatter = points
        .iter()
        .map(|p| (p - mean) * (p - mean).transpose())
        .sum::<Matrix3<f64>>();
    let eig = sorted_symmetric_eigen(&scatter);
    // collinear or coincident points leave the plane undetermined
    if eig.values[2] <= 0.0 || eig.values[1] <= 1e-9 * eig.values[2] {
        return None;
    }
    let mut normal = eig.vector(0);
    if normal.dot(&(viewpoint - mean)) < 0.0 {
        normal = -normal;
    }
    Some(UnitVec3::new_normalize(normal))
}

/// Normal at pixel `(u, v)` from the `(2w+1)²` window.
pub fn estimate_normal(frame: &Frame, u: usize, v: usize, half_window: usize) -> Option<NormalEstimate> {
    let zc = frame.depth_at(u, v)?;
    let w = half_window as isize;
    let mut points = Vec::with_capacity(((2 * w + 1) * (2 * w + 1)) as usize);
    let mut dropped = false;
    for dv in -w..=w {
        for du in -w..=w {
            let (uu, vv) = (u as isize + du, v as isize + dv);
            let Some(z) = frame.depth.get_signed(uu, vv) else {
                continue;
            };
            if z <= 0.0 {
                continue;
            }
            let z = z as f64;
            if (z - zc).abs() > DISCONTINUITY_RATIO * zc {
                dropped = true;
                continue;
            }
            points.push(frame.intrinsics.backproject(uu as f64, vv as f64, z));
        }
    }
    if points.len() < MIN_WINDOW_POINTS {
        return None;
    }
    let normal = scatter_normal(&points, &Vector3::zeros())?;
    Some(NormalEstimate {
        normal,
        points: points.len(),
        straddles_edge: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    #[test]
    fn collinear_points_are_rejected() {
        let pts: Vec<_> = (0..10).map(|i| Vector3::new(i as f64, 0.0, 1.0)).collect();
        assert!(scatter_normal(&pts, &Vector3::zeros()).is_none());
    }

    proptest! {
        #[test]
        fn rigid_motion_invariance(
            ax in -3.0f64..3.0, ay in -3.0f64..3.0, az in -3.0f64..3.0,
            tx in -2.0f64..2.0, ty in -2.0f64..2.0, tz in -2.0f64..2.0,
            tilt in -0.6f64..0.6,
        ) {
            let pts: Vec<_> = (0..25)
                .map(|i| {
                    let (x, y) = ((i % 5) as f64 * 0.01, (i / 5) as f64 * 0.01);
                    Vector3::new(x, y, 1.5 + tilt * x)
                })
                .collect();
            let base = scatter_normal(&pts, &Vector3::zeros()).unwrap();
            let r = Rotation3::new(Vector3::new(ax, ay, az));
            let t = Vector3::new(tx, ty, tz);
            let moved: Vec<_> = pts.iter().map(|p| r * p + t).collect();
            let n = scatter_normal(&moved, &t).unwrap();
            let back = r.inverse() * n.into_inner();
            prop_assert!((back - base.into_inner()).norm() < 1e-6);
        }
    }

    #[test]
    fn faces_the_camera() {
        let pts: Vec<_> = (0..9)
            .map(|i| Vector3::new((i % 3) as f64 * 0.01, (i / 3) as f64 * 0.01, 2.0))
            .collect();
        let n = scatter_normal(&pts, &Vector3::zeros()).unwrap();
        assert_relative_eq!(n.into_inner(), -Vector3::z(), epsilon = 1e-9);
    }
}
