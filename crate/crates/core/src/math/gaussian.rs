use std::f64::consts::{E, PI};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// 3-D Gaussian in moment form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian3 {
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
}

impl Gaussian3 {
    pub fn new(mean: Vector3<f64>, covariance: Matrix3<f64>) -> Self {
        Self { mean, covariance }
    }

    /// Differential entropy `½ ln((2πe)³ |Σ|)`, with eigenvalues floored at `floor`.
    pub fn entropy(&self, floor: f64) -> f64 {
        gaussian_entropy(&self.covariance, floor)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        let l = self
            .covariance
            .cholesky()
            .map(|c| c.l())
            .unwrap_or_else(|| psd_sqrt(&self.covariance));
        let z = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        self.mean + l * z
    }
}

pub(crate) fn gaussian_entropy(cov: &Matrix3<f64>, floor: f64) -> f64 {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let log_det: f64 = eig.iter().map(|&l| l.max(floor).ln()).sum();
    0.5 * (3.0 * (2.0 * PI * E).ln() + log_det)
}

fn psd_sqrt(m: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * Matrix3::from_diagonal(&d)
}

/// 3-D Gaussian in information form, `exp(−½ xᵀΛx + ηᵀx)`. The information
/// matrix may be rank deficient (degenerate Gaussian).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InformationGaussian3 {
    pub information: Matrix3<f64>,
    pub eta: Vector3<f64>,
}

impl Default for InformationGaussian3 {
    fn default() -> Self {
        Self::zero()
    }
}

impl InformationGaussian3 {
    pub fn zero() -> Self {
        Self {
            information: Matrix3::zeros(),
            eta: Vector3::zeros(),
        }
    }

    pub fn new(information: Matrix3<f64>, eta: Vector3<f64>) -> Self {
        Self { information, eta }
    }

    /// Factor with information `info` centred on `mean`.
    pub fn centred(info: Matrix3<f64>, mean: &Vector3<f64>) -> Self {
        Self::new(info, info * mean)
    }

    pub fn accumulate(&mut self, other: &InformationGaussian3) {
        self.information += other.information;
        self.eta += other.eta;
    }

    /// Condition number of the information matrix (∞ if singular).
    pub fn condition_number(&self) -> f64 {
        let eig = self.information.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Moment form. Returns `None` when the information matrix is not positive definite.
    pub fn to_moment(&self) -> Option<Gaussian3> {
        let info = (self.information + self.information.transpose()) * 0.5;
        let chol = info.cholesky()?;
        let cov = chol.inverse();
        let mean = chol.solve(&self.eta);
        Some(Gaussian3::new(mean, (cov + cov.transpose()) * 0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_of_two_equal_observations() {
        let cov = Matrix3::identity() * 4e-4;
        let info = cov.try_inverse().unwrap();
        let mut g = InformationGaussian3::centred(info, &Vector3::new(1.0, 2.0, 3.0));
        g.accumulate(&InformationGaussian3::centred(info, &Vector3::new(1.2, 2.0, 2.8)));
        let m = g.to_moment().unwrap();
        assert_relative_eq!(m.mean, Vector3::new(1.1, 2.0, 2.9), epsilon = 1e-12);
        assert_relative_eq!(m.covariance, cov * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_information_has_no_moment_form() {
        let n = Vector3::z();
        let g = InformationGaussian3::centred(n * n.transpose(), &Vector3::zeros());
        assert!(g.to_moment().is_none());
        assert!(g.condition_number().is_infinite());
    }

    #[test]
    fn entropy_of_unit_gaussian() {
        let g = Gaussian3::new(Vector3::zeros(), Matrix3::identity());
        assert_relative_eq!(g.entropy(1e-12), 1.5 * (2.0 * PI * E).ln(), epsilon = 1e-12);
    }

    #[test]
    fn samples_match_covariance() {
        let a = Matrix3::new(0.2, 0.0, 0.0, 0.1, 0.3, 0.0, -0.1, 0.05, 0.1);
        let g = Gaussian3::new(Vector3::new(1.0, -1.0, 0.5), a * a.transpose());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let xs: Vec<_> = (0..n).map(|_| g.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<Vector3<f64>>() / n as f64;
        let cov = xs
            .iter()
            .map(|x| (x - mean) * (x - mean).transpose())
            .sum::<Matrix3<f64>>()
            / n as f64;
        assert_relative_eq!(mean, g.mean, epsilon = 3e-3);
        assert_relative_eq!(cov, g.covariance, epsilon = 2e-3);
    }
}
