use std::ops::Mul;

use nalgebra::{Matrix3, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// Cross-product matrix `[v]×`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rigid transform in SE(3). Tangent vectors are ordered `(rotation, translation)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Se3 {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Se3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Se3 {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), t)
    }

    /// Builds a transform from a (possibly slightly non-orthonormal) rotation matrix.
    pub fn from_matrix_parts(r: &Matrix3<f64>, t: Vector3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_eps(r, 1e-12, 100, nalgebra::Rotation3::identity());
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), t)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        Self::new(r, -(r * self.translation))
    }

    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p - self.translation)
    }

    /// `self ∘ rhs`. The quaternion is renormalized so long chains of
    /// compositions stay on SO(3).
    pub fn compose(&self, rhs: &Se3) -> Self {
        let q = self.rotation.quaternion() * rhs.rotation.quaternion();
        Self::new(
            UnitQuaternion::new_normalize(q),
            self.rotation * rhs.translation + self.translation,
        )
    }

    pub fn exp(omega: &Vector6<f64>) -> Self {
        let phi = Vector3::new(omega[0], omega[1], omega[2]);
        let rho = Vector3::new(omega[3], omega[4], omega[5]);
        let theta = phi.norm();
        let rotation = so3_exp(&phi);
        let v = left_jacobian(&phi, theta);
        Self::new(rotation, v * rho)
    }

    pub fn log(&self) -> Vector6<f64> {
        let phi = so3_log(&self.rotation);
        let theta = phi.norm();
        let v_inv = left_jacobian_inverse(&phi, theta);
        let rho = v_inv * self.translation;
        Vector6::new(phi.x, phi.y, phi.z, rho.x, rho.y, rho.z)
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        self.rotation.angle()
    }

    /// Distance from orthonormality of the rotation matrix, `‖RᵀR − I‖∞`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation_matrix();
        (r.transpose() * r - Matrix3::identity()).abs().max()
    }
}

impl Mul for Se3 {
    type Output = Se3;
    fn mul(self, rhs: Se3) -> Se3 {
        self.compose(&rhs)
    }
}

impl Mul for &Se3 {
    type Output = Se3;
    fn mul(self, rhs: &Se3) -> Se3 {
        self.compose(rhs)
    }
}

fn so3_exp(phi: &Vector3<f64>) -> UnitQuaternion<f64> {
    let theta = phi.norm();
    let half = 0.5 * theta;
    let (w, k) = if theta < 1e-8 {
        (1.0 - theta * theta / 8.0, 0.5 - theta * theta / 48.0)
    } else {
        (half.cos(), half.sin() / theta)
    };
    UnitQuaternion::new_normalize(Quaternion::new(w, k * phi.x, k * phi.y, k * phi.z))
}

fn so3_log(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let mut w = q.w;
    let mut v = q.imag();
    if w < 0.0 {
        w = -w;
        v = -v;
    }
    let s = v.norm();
    if s < 1e-8 {
        // 2 atan2(s, w) / s ≈ 2/w (1 − s²/(3w²))
        return v * (2.0 / w) * (1.0 - s * s / (3.0 * w * w));
    }
    v * (2.0 * s.atan2(w) / s)
}

fn left_jacobian(phi: &Vector3<f64>, theta: f64) -> Matrix3<f64> {
    let k = skew(phi);
    let (a, b) = if theta < 1e-5 {
        let t2 = theta * theta;
        (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        let t2 = theta * theta;
        ((1.0 - theta.cos()) / t2, (theta - theta.sin()) / (t2 * theta))
    };
    Matrix3::identity() + k * a + k * k * b
}

fn left_jacobian_inverse(phi: &Vector3<f64>, theta: f64) -> Matrix3<f64> {
    let k = skew(phi);
    let c = if theta < 1e-5 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0
    } else {
        let t2 = theta * theta;
        (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / t2
    };
    Matrix3::identity() - k * 0.5 + k * k * c
}

/// Camera pose with its tangent-space covariance (ordered like [`Se3::log`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub transform: Se3,
    pub covariance: Matrix6<f64>,
}

impl Pose {
    pub fn new(transform: Se3, covariance: Matrix6<f64>) -> Self {
        Self {
            transform,
            covariance,
        }
    }

    pub fn with_isotropic_covariance(transform: Se3, variance: f64) -> Self {
        Self::new(transform, Matrix6::identity() * variance)
    }
}
