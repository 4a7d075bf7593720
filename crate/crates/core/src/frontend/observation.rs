use nalgebra::{Matrix3, Matrix3x6, Vector3};

use super::{estimate_normal, DepthNoiseModel, Frame};
use crate::map::{SurfelId, WorldObservation};
use crate::math::{skew, Pose, UnitVec3};

/// One pixel measurement in the camera frame.
#[derive(Clone, Copy, Debug)]
pub struct CameraObservation {
    pub point: Vector3<f64>,
    pub normal: UnitVec3,
    pub intensity: f64,
    /// Depth-noise covariance `Σ_O`.
    pub covariance: Matrix3<f64>,
    pub pixel: (usize, usize),
    pub gradient: f64,
}

/// An observation assigned to a surfel.
#[derive(Clone, Copy, Debug)]
pub struct Association {
    pub surfel: SurfelId,
    pub observation: CameraObservation,
}

/// Observations emitted by projective association, one per associated
/// surfel.
pub type ObservationBatch = Vec<Association>;

/// Measures a pixel: back-projected point, window normal, intensity and
/// noise covariance. `None` for invalid depth or an undetermined normal.
pub fn observe_pixel(
    frame: &Frame,
    u: usize,
    v: usize,
    noise: &DepthNoiseModel,
    half_window: usize,
) -> Option<CameraObservation> {
    let point = frame.point_at(u, v)?;
    let normal = estimate_normal(frame, u, v, half_window)?.normal;
    Some(CameraObservation {
        point,
        normal,
        intensity: frame.intensity.get(u, v) as f64,
        covariance: noise.covariance(&point, frame.intrinsics.mean_focal()),
        pixel: (u, v),
        gradient: frame.gradient.get(u, v) as f64,
    })
}

/// `∂(T·exp(ω)·x)/∂ω` expressed in the camera frame: `[−[x]×, I]`.
pub fn point_jacobian(x: &Vector3<f64>) -> Matrix3x6<f64> {
    let mut j = Matrix3x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(x)));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
    j
}

impl CameraObservation {
    /// `Σ_p = Σ_O + J Σ_T Jᵀ` in the camera frame.
    pub fn propagated_covariance(&self, pose: &Pose) -> Matrix3<f64> {
        let j = point_jacobian(&self.point);
        let c = self.covariance + j * pose.covariance * j.transpose();
        (c + c.transpose()) * 0.5
    }

    pub fn to_world(&self, pose: &Pose) -> WorldObservation {
        let r = pose.transform.rotation_matrix();
        let cov = self.propagated_covariance(pose);
        let info_cam = cov
            .try_inverse()
            .expect("observation covariance is positive definite");
        let info = r * info_cam * r.transpose();
        WorldObservation {
            point: pose.transform.transform_point(&self.point),
            information: (info + info.transpose()) * 0.5,
            normal: UnitVec3::new_normalize(r * self.normal.into_inner()),
            intensity: self.intensity,
            gradient: self.gradient,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Se3;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix6, Vector6};

    #[test]
    fn point_jacobian_matches_finite_differences() {
        let x = Vector3::new(0.3, -0.2, 1.7);
        let j = point_jacobian(&x);
        let h = 1e-6;
        for k in 0..6 {
            let mut w = Vector6::zeros();
            w[k] = h;
            let plus = Se3::exp(&w).transform_point(&x);
            let minus = Se3::exp(&-w).transform_point(&x);
            let col = (plus - minus) / (2.0 * h);
            assert_relative_eq!(col, j.column(k).into_owned(), epsilon = 1e-8);
        }
    }

    #[test]
    fn world_information_rotates_camera_covariance() {
        let obs = CameraObservation {
            point: Vector3::new(0.0, 0.0, 2.0),
            normal: UnitVec3::new_normalize(-Vector3::z()),
            intensity: 0.5,
            covariance: Matrix3::from_diagonal(&Vector3::new(1e-6, 4e-6, 9e-6)),
            pixel: (0, 0),
            gradient: 0.0,
        };
        let t = Se3::exp(&Vector6::new(0.2, -0.4, 0.9, 1.0, 2.0, 3.0));
        let pose = Pose::new(t, Matrix6::zeros());
        let w = obs.to_world(&pose);
        let r = t.rotation_matrix();
        let expected = r * obs.covariance.try_inverse().unwrap() * r.transpose();
        assert_relative_eq!(w.information, expected, max_relative = 1e-10);
        assert_relative_eq!(w.point, t.transform_point(&obs.point), epsilon = 1e-12);
    }
}
