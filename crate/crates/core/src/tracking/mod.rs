//! Frame-to-model tracking: joint point-to-plane and photometric
//! Gauss–Newton on SE(3) with entropy-bounded observation selection.

mod icp;
mod queues;
mod residual;

use std::f64::consts::{E, PI};

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

pub use icp::{incremental_icp, TrackDiagnostics, TrackResult};
pub use queues::SegmentQueues;
pub use residual::{icp_residual_jacobian, p2pl_sigma, photometric_sigma, IcpRows, ResidualRow};

/// How candidate surfels are ordered for selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Round robin over segment queues, each sorted by decreasing gradient.
    #[default]
    DirectionAware,
    /// Uniformly shuffled candidates.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingConfig {
    /// Stop adding surfels once the entropy bound falls below this (nats).
    pub h_max: f64,
    /// ... and the smallest eigenvalue of JᵀJ exceeds this.
    pub lambda_min: f64,
    /// Photometric weight λ_I.
    pub lambda_i: f64,
    /// Image intensity noise σ_I (intensity units).
    pub sigma_i: f64,
    /// Photometric residuals beyond this many standard deviations are rejected.
    pub photo_gate: f64,
    /// Out-of-plane scale σ_pl (m).
    pub sigma_pl: f64,
    /// Upper bound on surfels selected per Gauss–Newton iteration.
    pub budget: usize,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Convergence threshold on ‖ω*‖.
    pub convergence: f64,
    pub pyramid_levels: usize,
    pub selection: Selection,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            h_max: -10.0,
            lambda_min: 1e4,
            lambda_i: 0.1,
            sigma_i: 0.05,
            photo_gate: 3.0,
            sigma_pl: 0.01,
            budget: 5000,
            max_iterations: 10,
            max_halvings: 5,
            convergence: 1e-6,
            pyramid_levels: 2,
            selection: Selection::DirectionAware,
        }
    }
}

/// `3 ln(2πe) − ½ ln|JᵀJ|`, or `+∞` when the determinant is not positive.
pub fn entropy_bound(jtj: &Matrix6<f64>) -> f64 {
    let Some(chol) = ((jtj + jtj.transpose()) * 0.5).cholesky() else {
        return f64::INFINITY;
    };
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if !log_det.is_finite() {
        return f64::INFINITY;
    }
    3.0 * (2.0 * PI * E).ln() - 0.5 * log_det
}

/// Normal equations accumulated over selected residual rows.
#[derive(Clone, Debug, PartialEq)]
pub struct IcpWorkspace {
    pub jtj: Matrix6<f64>,
    pub jtb: Vector6<f64>,
    pub cost: f64,
    pub rows: usize,
    pub selected: usize,
}

impl Default for IcpWorkspace {
    fn default() -> Self {
        Self {
            jtj: Matrix6::zeros(),
            jtb: Vector6::zeros(),
            cost: 0.0,
            rows: 0,
            selected: 0,
        }
    }
}

impl IcpWorkspace {
    pub fn add(&mut self, row: &ResidualRow) {
        self.jtj += row.jacobian * row.jacobian.transpose();
        self.jtb += row.jacobian * row.residual;
        self.cost += row.residual * row.residual;
        self.rows += 1;
    }

    pub fn add_rows(&mut self, rows: &IcpRows) {
        for r in rows.iter() {
            self.add(r);
        }
        self.selected += 1;
    }

    pub fn entropy_bound(&self) -> f64 {
        entropy_bound(&self.jtj)
    }

    pub fn lambda_min(&self) -> f64 {
        ((self.jtj + self.jtj.transpose()) * 0.5).symmetric_eigenvalues().min()
    }

    /// Gauss–Newton step `−(JᵀJ)⁻¹Jᵀb`.
    pub fn step(&self) -> Option<Vector6<f64>> {
        let chol = ((self.jtj + self.jtj.transpose()) * 0.5).cholesky()?;
        Some(-chol.solve(&self.jtb))
    }

    /// `(JᵀJ)⁻¹` when JᵀJ is positive definite.
    pub fn covariance(&self) -> Option<Matrix6<f64>> {
        let chol = ((self.jtj + self.jtj.transpose()) * 0.5).cholesky()?;
        let c = chol.inverse();
        Some((c + c.transpose()) * 0.5)
    }

    pub fn thresholds_met(&self, config: &TrackingConfig) -> bool {
        self.entropy_bound() <= config.h_max && self.lambda_min() >= config.lambda_min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_information_bound() {
        assert_relative_eq!(entropy_bound(&Matrix6::identity()), 3.0 * (2.0 * PI * E).ln(), epsilon = 1e-12);
        assert_relative_eq!(entropy_bound(&Matrix6::identity()), 8.5136, epsilon = 1e-4);
    }

    #[test]
    fn scaled_information_bound() {
        let expected = 3.0 * (2.0 * PI * E).ln() - 3.0 * 4f64.ln();
        assert_relative_eq!(entropy_bound(&(Matrix6::identity() * 4.0)), expected, epsilon = 1e-12);
    }

    #[test]
    fn singular_information_is_maximally_uncertain() {
        let mut m = Matrix6::identity();
        m[(5, 5)] = 0.0;
        assert_eq!(entropy_bound(&m), f64::INFINITY);
        assert_eq!(entropy_bound(&Matrix6::zeros()), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn rank_one_rows_never_raise_the_bound(
            seed in prop::collection::vec(-1.0f64..1.0, 36),
            row in prop::collection::vec(-10.0f64..10.0, 6),
        ) {
            let a = Matrix6::from_iterator(seed);
            let pd = a * a.transpose() + Matrix6::identity() * 0.1;
            let j = Vector6::from_iterator(row);
            let before = entropy_bound(&pd);
            let after = entropy_bound(&(pd + j * j.transpose()));
            prop_assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn workspace_step_solves_normal_equations() {
        let mut ws = IcpWorkspace::default();
        let target = Vector6::new(0.1, -0.2, 0.05, 0.3, 0.0, -0.1);
        for i in 0..6 {
            let j = Vector6::from_fn(|r, _| if r == i { 2.0 } else { 0.1 * (r + i) as f64 });
            ws.add(&ResidualRow {
                residual: -j.dot(&target),
                jacobian: j,
            });
        }
        assert_relative_eq!(ws.step().unwrap(), target, epsilon = 1e-12);
        assert!(ws.covariance().is_some());
    }
}
