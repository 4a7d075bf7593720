//! Directional statistics and rigid-body geometry shared by every stage of
//! the pipeline.

mod bingham;
mod eigen;
mod gaussian;
mod se3;
mod vmf;

pub use bingham::{bingham_to_vmf, ConcentrationForm};
pub use eigen::{sorted_symmetric_eigen, SortedEigen3};
pub use gaussian::{Gaussian3, InformationGaussian3};
pub use se3::{skew, Pose, Se3};
pub use vmf::{log_sinh, orthonormal_basis, uniform_on_sphere, VonMisesFisher};

use nalgebra::{UnitVector3, Vector3};

/// A direction on S².
pub type UnitVec3 = UnitVector3<f64>;

/// Normalizes `v`, returning `None` for (near-)zero vectors.
pub fn try_unit(v: Vector3<f64>) -> Option<UnitVec3> {
    UnitVec3::try_new(v, 1e-300)
}
