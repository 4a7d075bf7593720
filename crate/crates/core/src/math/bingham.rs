use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{sorted_symmetric_eigen, UnitVec3, VonMisesFisher};

/// How the vMF concentration is formed from the two largest eigenvalues of
/// the Bingham scatter matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationForm {
    /// `2 e₂ e₃ / (e₂ + e₃)`, the harmonic mean of the in-plane precisions.
    #[default]
    HarmonicMean,
    /// `2 e₂ e₂ / (e₂ + e₃)`.
    Literal,
}

impl ConcentrationForm {
    pub fn concentration(self, e2: f64, e3: f64) -> f64 {
        let sum = e2 + e3;
        if sum < 1e-12 {
            return 0.0;
        }
        let c = match self {
            ConcentrationForm::HarmonicMean => 2.0 * e2 * e3 / sum,
            ConcentrationForm::Literal => 2.0 * e2 * e2 / sum,
        };
        c.max(0.0)
    }
}

/// Approximates the Bingham density `exp(−½ nᵀ S n)` by a vMF whose mode is
/// the eigenvector of the smallest eigenvalue of `S`.
///
/// The Bingham density is antipodally symmetric; the returned mode carries
/// the deterministic eigenvector sign and callers pick the hemisphere.
pub fn bingham_to_vmf(scatter: &Matrix3<f64>, form: ConcentrationForm) -> VonMisesFisher {
    let eig = sorted_symmetric_eigen(scatter);
    let e2 = eig.values[1].max(0.0);
    let e3 = eig.values[2].max(0.0);
    let mode = UnitVec3::new_normalize(eig.vector(0));
    VonMisesFisher::new(mode, form.concentration(e2, e3))
}
