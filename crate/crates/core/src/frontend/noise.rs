use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Quadratic axial / linear lateral depth-noise model.
///
/// `σ_z(z) = base + quadratic·(z − vertex)²`, `σ_xy(z) = z·lateral_px / f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DepthNoiseModel {
    pub axial_base: f64,
    pub axial_quadratic: f64,
    pub axial_vertex: f64,
    pub lateral_px: f64,
}

impl Default for DepthNoiseModel {
    fn default() -> Self {
        Self {
            axial_base: 0.0012,
            axial_quadratic: 0.0019,
            axial_vertex: 0.4,
            lateral_px: 0.8,
        }
    }
}

impl DepthNoiseModel {
    pub fn axial_sigma(&self, z: f64) -> f64 {
        let d = z - self.axial_vertex;
        self.axial_base + self.axial_quadratic * d * d
    }

    pub fn lateral_sigma(&self, z: f64, focal: f64) -> f64 {
        z * self.lateral_px / focal
    }

    /// Σ_O of a camera-frame point: axial variance along the viewing ray,
    /// lateral variance across it.
    pub fn covariance(&self, point: &Vector3<f64>, focal: f64) -> Matrix3<f64> {
        let z = point.z;
        let sz2 = self.axial_sigma(z).powi(2);
        let sxy2 = self.lateral_sigma(z, focal).powi(2);
        let ray = point.normalize();
        Matrix3::identity() * sxy2 + ray * ray.transpose() * (sz2 - sxy2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axial_sigma_values() {
        let m = DepthNoiseModel::default();
        assert_relative_eq!(m.axial_sigma(0.4), 0.0012, epsilon = 1e-15);
        assert_relative_eq!(m.axial_sigma(1.4), 0.0031, epsilon = 1e-15);
        assert!(m.axial_sigma(0.3) > m.axial_sigma(0.4));
    }

    #[test]
    fn on_axis_eigenvalues() {
        let m = DepthNoiseModel::default();
        let z = 2.0;
        let c = m.covariance(&Vector3::new(0.0, 0.0, z), 525.0);
        let mut eig: Vec<f64> = c.symmetric_eigenvalues().iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        let sxy = z * 0.8 / 525.0;
        let sz = m.axial_sigma(z);
        assert_relative_eq!(eig[0], sxy * sxy, epsilon = 1e-15);
        assert_relative_eq!(eig[1], sxy * sxy, epsilon = 1e-15);
        assert_relative_eq!(eig[2], sz * sz, epsilon = 1e-15);
        assert_relative_eq!(c[(2, 2)], sz * sz, epsilon = 1e-15);
    }
}
