use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::Distribution;

use super::UnitVec3;

const LN_4PI: f64 = 2.531_024_246_969_291;

/// von-Mises-Fisher distribution on S².
///
/// A concentration of zero is the uniform distribution on the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VonMisesFisher {
    pub mode: UnitVec3,
    pub concentration: f64,
}

impl VonMisesFisher {
    pub fn new(mode: UnitVec3, concentration: f64) -> Self {
        debug_assert!(concentration >= 0.0 && concentration.is_finite());
        Self {
            mode,
            concentration: concentration.max(0.0),
        }
    }

    pub fn uniform() -> Self {
        Self::new(Vector3::z_axis(), 0.0)
    }

    /// `ln C₃(τ)` with `C₃(τ) = τ / (4π sinh τ)`, stable for τ up to f64 range.
    pub fn log_normalizer(concentration: f64) -> f64 {
        let tau = concentration;
        if tau < 1e-8 {
            // τ / sinh τ = 1 − τ²/6 + …
            return -LN_4PI - tau * tau / 6.0;
        }
        tau.ln() - LN_4PI - log_sinh(tau)
    }

    pub fn log_pdf(&self, x: &UnitVec3) -> f64 {
        Self::log_normalizer(self.concentration) + self.concentration * self.mode.dot(x)
    }

    pub fn pdf(&self, x: &UnitVec3) -> f64 {
        self.log_pdf(x).exp()
    }

    /// Expected cosine to the mode, `A₃(τ) = coth τ − 1/τ`.
    pub fn mean_resultant_length(&self) -> f64 {
        let tau = self.concentration;
        if tau < 1e-4 {
            return tau / 3.0;
        }
        1.0 / tau.tanh() - 1.0 / tau
    }

    /// CDF of the cosine `t = modeᵀx` under this distribution.
    pub fn cosine_cdf(&self, t: f64) -> f64 {
        let tau = self.concentration;
        let t = t.clamp(-1.0, 1.0);
        if tau < 1e-8 {
            return 0.5 * (t + 1.0);
        }
        // (e^{τ(t−1)} − e^{−2τ}) / (1 − e^{−2τ})
        let num = (tau * (t - 1.0)).exp() - (-2.0 * tau).exp();
        let den = -(-2.0 * tau).exp_m1();
        (num / den).clamp(0.0, 1.0)
    }

    /// Inverse-CDF draw of the cosine component, `u ∈ [0, 1)`.
    pub fn cosine_quantile(&self, u: f64) -> f64 {
        let tau = self.concentration;
        if tau < 1e-8 {
            return 2.0 * u - 1.0;
        }
        // w = 1 + ln(u + (1 − u)e^{−2τ}) / τ
        let w = 1.0 + ((1.0 - u) * (-2.0 * tau).exp_m1()).ln_1p() / tau;
        w.clamp(-1.0, 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVec3 {
        let w = self.cosine_quantile(rng.random::<f64>());
        let phi = 2.0 * PI * rng.random::<f64>();
        let (b1, b2) = orthonormal_basis(&self.mode);
        let s = (1.0 - w * w).max(0.0).sqrt();
        let v = b1 * (s * phi.cos()) + b2 * (s * phi.sin()) + self.mode.into_inner() * w;
        UnitVec3::new_normalize(v)
    }
}

impl Distribution<UnitVec3> for VonMisesFisher {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVec3 {
        VonMisesFisher::sample(self, rng)
    }
}

/// Uniform draw on S².
pub fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R) -> UnitVec3 {
    VonMisesFisher::uniform().sample(rng)
}

/// `ln sinh x` for `x > 0` without overflow.
pub fn log_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Two unit vectors completing `n` to a right-handed orthonormal frame
/// (Duff et al. branchless construction).
pub fn orthonormal_basis(n: &UnitVec3) -> (Vector3<f64>, Vector3<f64>) {
    let sign = 1.0_f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    let b1 = Vector3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
    let b2 = Vector3::new(b, sign + n.y * n.y * a, -n.y);
    (b1, b2)
}
