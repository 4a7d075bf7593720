use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{log_sinh, try_unit, UnitVec3, VonMisesFisher};

/// Conjugate prior `p(μ, τ) ∝ C₃(τ)^a exp(b τ μᵀμ₀)` of the vMF parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VmfPrior {
    pub mu0: UnitVec3,
    /// Pseudo-counts.
    pub a: f64,
    /// Concentration-mode weight, `0 < b < a`.
    pub b: f64,
}

impl Default for VmfPrior {
    fn default() -> Self {
        Self {
            mu0: Vector3::z_axis(),
            a: 1.0,
            b: 0.3,
        }
    }
}

/// Posterior hyper-parameters `(ã, b̃, μ̃₀)` after observing normals with
/// resultant `sum` and count `count`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorParams {
    pub a: f64,
    pub b: f64,
    pub mu0: UnitVec3,
}

impl VmfPrior {
    pub fn posterior(&self, sum: &Vector3<f64>, count: usize) -> PosteriorParams {
        let theta = sum + self.mu0.into_inner() * self.b;
        let norm = theta.norm();
        let (b, mu0) = if norm < 1e-12 {
            (0.0, self.mu0)
        } else {
            (norm, try_unit(theta).unwrap_or(self.mu0))
        };
        PosteriorParams {
            a: self.a + count as f64,
            b,
            mu0,
        }
    }

    /// Density of a normal under the base measure with `(μ, τ)` integrated out.
    pub fn marginal(&self, n: &UnitVec3) -> f64 {
        self.log_marginal(n).exp()
    }

    pub fn log_marginal(&self, n: &UnitVec3) -> f64 {
        let r = (n.into_inner() + self.mu0.into_inner() * self.b).norm();
        if self.a == 1.0 && self.b > 0.0 && self.b < 1.0 {
            log_marginal_closed_form(r, self.b)
        } else {
            log_marginal_quadrature(r, self.a, self.b)
        }
    }
}

/// `p(n) = b / (4π tan(bπ/2) r) · (x / sin²x − cot x)`, `x = πr/2`,
/// `r = ‖n + bμ₀‖`; valid for `a = 1`, `0 < b < 1`.
fn log_marginal_closed_form(r: f64, b: f64) -> f64 {
    let x = 0.5 * PI * r;
    let g = if x < 1e-4 {
        // x/sin²x − cot x → 2x/3
        2.0 * x / 3.0
    } else {
        let s = x.sin();
        x / (s * s) - x.cos() / s
    };
    (b / (4.0 * PI * (0.5 * b * PI).tan() * r) * g).ln()
}

const QUAD_POINTS: usize = 1024;

/// `∫ C₃(τ)^{a+1} 4π sinh(τr)/(τr) dτ / ∫ C₃(τ)^a 4π sinh(bτ)/(bτ) dτ` by
/// trapezoidal quadrature in `ln τ`.
fn log_marginal_quadrature(r: f64, a: f64, b: f64) -> f64 {
    let log_num = log_integral(|tau| {
        (a + 1.0) * VonMisesFisher::log_normalizer(tau) + (4.0 * PI).ln() + log_sinhc(tau * r)
    }, a + 1.0 - r);
    let log_den = log_integral(|tau| a * VonMisesFisher::log_normalizer(tau) + (4.0 * PI).ln() + log_sinhc(b * tau), a - b);
    log_num - log_den
}

/// `ln(sinh x / x)`, equal to 0 at `x = 0`.
pub(crate) fn log_sinhc(x: f64) -> f64 {
    if x < 1e-6 {
        x * x / 6.0
    } else {
        log_sinh(x) - x.ln()
    }
}

/// `ln ∫₀^∞ exp(f(τ)) dτ` for an integrand decaying like `e^{−rate·τ}`.
fn log_integral(f: impl Fn(f64) -> f64, rate: f64) -> f64 {
    let lo = (1e-8f64).ln();
    let hi = (80.0 / rate.max(1e-3)).max(10.0).ln();
    let h = (hi - lo) / (QUAD_POINTS - 1) as f64;
    let vals: Vec<f64> = (0..QUAD_POINTS)
        .map(|i| {
            let s = lo + h * i as f64;
            f(s.exp()) + s
        })
        .collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == QUAD_POINTS - 1 { 0.5 } else { 1.0 };
            w * (v - m).exp()
        })
        .sum();
    m + (sum * h).ln()
}

/// Number of points of the concentration grid.
pub const TAU_GRID_POINTS: usize = 512;
pub const TAU_GRID_MIN: f64 = 1e-2;
pub const TAU_GRID_MAX: f64 = 1e4;

/// Log-spaced concentration grid on `[1e-2, 1e4]`.
pub fn tau_grid() -> &'static [f64] {
    static GRID: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    GRID.get_or_init(|| {
        let (lo, hi) = (TAU_GRID_MIN.ln(), TAU_GRID_MAX.ln());
        (0..TAU_GRID_POINTS)
            .map(|i| (lo + (hi - lo) * i as f64 / (TAU_GRID_POINTS - 1) as f64).exp())
            .collect()
    })
}

impl PosteriorParams {
    /// Unnormalised log marginal posterior of τ:
    /// `ã ln C₃(τ) + ln(sinh(b̃τ)/(b̃τ))` up to constants.
    pub fn log_tau_density(&self, tau: f64) -> f64 {
        self.a * VonMisesFisher::log_normalizer(tau) + log_sinhc(self.b * tau)
    }

    /// Grid probabilities of τ (grid cells weighted by their width ∝ τ).
    pub fn tau_weights(&self) -> Vec<f64> {
        let grid = tau_grid();
        let logs: Vec<f64> = grid.iter().map(|&t| self.log_tau_density(t) + t.ln()).collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// Draws `(μ, τ)`: τ by inversion on the grid, then `μ ~ vMF(μ̃₀, b̃τ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (UnitVec3, f64) {
        let weights = self.tau_weights();
        let idx = sample_categorical(&weights, rng.random::<f64>());
        let tau = tau_grid()[idx];
        let mu = VonMisesFisher::new(self.mu0, self.b * tau).sample(rng);
        (mu, tau)
    }
}

/// Inversion sampling from normalised probabilities.
pub fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples cluster parameters from the conjugate posterior given member
/// normals' resultant and count.
pub fn vmf_param_posterior<R: Rng + ?Sized>(
    sum: &Vector3<f64>,
    count: usize,
    prior: &VmfPrior,
    rng: &mut R,
) -> (UnitVec3, f64) {
    prior.posterior(sum, count).sample(rng)
}
