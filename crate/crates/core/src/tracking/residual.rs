use nalgebra::{Matrix2x3, Matrix3, Matrix3x6, RowVector2, Vector3, Vector6};

use super::TrackingConfig;
use crate::frontend::{point_jacobian, Frame};
use crate::map::SurfelEstimate;
use crate::math::{skew, Se3};

/// One whitened residual and its derivative with respect to the right
/// perturbation `T·exp(ω)`, ω = (rotation, translation).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRow {
    pub residual: f64,
    pub jacobian: Vector6<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IcpRows {
    pub p2pl: Option<ResidualRow>,
    pub photo: Option<ResidualRow>,
    /// Cost charged for a photometric residual rejected by the gate.
    pub photo_outlier_cost: f64,
}

impl IcpRows {
    pub fn iter(&self) -> impl Iterator<Item = &ResidualRow> {
        self.p2pl.iter().chain(self.photo.iter())
    }

    pub fn cost(&self) -> f64 {
        self.iter().map(|r| r.residual * r.residual).sum::<f64>() + self.photo_outlier_cost
    }
}

/// `σ_p2pl = sqrt(n̄ᵀ(R Σ_O Rᵀ + Σ̄)n̄ + σ_pl²)`.
pub fn p2pl_sigma(est: &SurfelEstimate, rotation: &Matrix3<f64>, point_cov: &Matrix3<f64>, sigma_pl: f64) -> f64 {
    let n = est.normal.into_inner();
    let cov = rotation * point_cov * rotation.transpose() + est.covariance;
    ((n.transpose() * cov * n)[(0, 0)] + sigma_pl * sigma_pl).sqrt()
}

/// Residual rows of one surfel against its associated camera-frame point
/// `point` (covariance `point_cov`) under camera-to-world pose `pose`.
/// The photometric row is omitted when the surfel projects outside the
/// interpolable image, and replaced by a constant cost when its residual
/// exceeds `photo_gate` standard deviations. Weights are evaluated at
/// `pose` and held constant in the Jacobians.
pub fn icp_residual_jacobian(
    est: &SurfelEstimate,
    point: &Vector3<f64>,
    point_cov: &Matrix3<f64>,
    frame: &Frame,
    pose: &Se3,
    config: &TrackingConfig,
) -> IcpRows {
    let r = pose.rotation_matrix();
    let n = est.normal.into_inner();
    let sigma = p2pl_sigma(est, &r, point_cov, config.sigma_pl);
    let world = pose.transform_point(point);
    let p2pl = ResidualRow {
        residual: n.dot(&(world - est.position)) / sigma,
        jacobian: (n.transpose() * r * point_jacobian(point)).transpose() / sigma,
    };

    let mut rows = IcpRows {
        p2pl: Some(p2pl),
        ..IcpRows::default()
    };
    if config.lambda_i > 0.0 {
        if let Some((row, normalized)) = photometric_row(est, frame, pose, config) {
            if normalized.abs() <= config.photo_gate {
                rows.photo = Some(row);
            } else {
                rows.photo_outlier_cost = config.lambda_i * config.photo_gate * config.photo_gate;
            }
        }
    }
    rows
}

/// `σ_photo² = σ_I² + ∇I J_π Σ̄_c J_πᵀ ∇Iᵀ`: the image noise plus the
/// intensity spread caused by the surfel's position uncertainty.
pub fn photometric_sigma(gradient: &RowVector2<f64>, d_proj: &Matrix2x3<f64>, cam_cov: &Matrix3<f64>, sigma_i: f64) -> f64 {
    let g = gradient * d_proj;
    (sigma_i * sigma_i + (g * cam_cov * g.transpose())[(0, 0)]).sqrt()
}

/// Every pixel of the 2×2 interpolation support at `corner` has a depth
/// whose back-projection lies within `photo_gate` standard deviations of
/// the surfel plane.
fn support_on_plane(est: &SurfelEstimate, frame: &Frame, pose: &Se3, corner: (usize, usize), config: &TrackingConfig) -> bool {
    let n = est.normal.into_inner();
    let sigma = ((n.transpose() * est.covariance * n)[(0, 0)] + config.sigma_pl * config.sigma_pl).sqrt();
    (0..2).all(|dv| {
        (0..2).all(|du| {
            frame
                .point_at(corner.0 + du, corner.1 + dv)
                .is_some_and(|x| n.dot(&(pose.transform_point(&x) - est.position)).abs() <= config.photo_gate * sigma)
        })
    })
}

/// The weighted row and the residual in units of its standard deviation.
fn photometric_row(
    est: &SurfelEstimate,
    frame: &Frame,
    pose: &Se3,
    config: &TrackingConfig,
) -> Option<(ResidualRow, f64)> {
    let k = &frame.intrinsics;
    let q = pose.inverse_transform_point(&est.position);
    let uv = k.project(&q)?;
    let sample = frame.intensity.bilinear(uv.x, uv.y)?;
    if !support_on_plane(est, frame, pose, (uv.x.floor() as usize, uv.y.floor() as usize), config) {
        return None;
    }
    let d_proj = Matrix2x3::new(
        k.fx / q.z,
        0.0,
        -k.fx * q.x / (q.z * q.z),
        0.0,
        k.fy / q.z,
        -k.fy * q.y / (q.z * q.z),
    );
    // d q / d ω for q = exp(−ω) T⁻¹ p̄
    let mut d_point = Matrix3x6::zeros();
    d_point.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&q));
    d_point.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-Matrix3::identity()));
    let grad = RowVector2::new(sample.du, sample.dv);
    let r = pose.rotation_matrix();
    let sigma = photometric_sigma(&grad, &d_proj, &(r.transpose() * est.covariance * r), config.sigma_i);
    let w = config.lambda_i.sqrt() / sigma;
    let normalized = (sample.value - est.intensity) / sigma;
    let row = ResidualRow {
        residual: w * (sample.value - est.intensity),
        jacobian: (grad * d_proj * d_point).transpose() * w,
    };
    Some((row, normalized))
}
