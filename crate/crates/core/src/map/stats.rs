use nalgebra::{Matrix3, Vector3};

use crate::math::{Gaussian3, InformationGaussian3, UnitVec3};
use crate::segmentation::ClusterId;

/// Number of label slots tracked per surfel.
pub const TRACKED_LABELS: usize = 3;

/// Misra-Gries summary over cluster labels: increments a tracked label,
/// fills a free slot, or otherwise decrements every slot and drops those
/// reaching zero. Any label above a quarter of the stream stays tracked.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopLabels {
    slots: [(ClusterId, u32); TRACKED_LABELS],
    len: usize,
}

impl TopLabels {
    pub fn record(&mut self, label: ClusterId) {
        if let Some(slot) = self.slots[..self.len].iter_mut().find(|(l, _)| *l == label) {
            slot.1 += 1;
            return;
        }
        if self.len < TRACKED_LABELS {
            self.slots[self.len] = (label, 1);
            self.len += 1;
            return;
        }
        let mut kept = 0;
        for i in 0..self.len {
            let (l, c) = self.slots[i];
            if c > 1 {
                self.slots[kept] = (l, c - 1);
                kept += 1;
            }
        }
        self.len = kept;
    }

    /// Label with the highest count; ties go to the earliest slot.
    pub fn most_likely(&self) -> Option<ClusterId> {
        self.slots[..self.len]
            .iter()
            .enumerate()
            .max_by_key(|(i, (_, c))| (*c, std::cmp::Reverse(*i)))
            .map(|(_, (l, _))| *l)
    }

    pub fn entries(&self) -> &[(ClusterId, u32)] {
        &self.slots[..self.len]
    }
}

/// Accumulated observation terms of one surfel, all in the world frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationSums {
    /// `Σ R Σ_p⁻¹ Rᵀ` and `Σ (R Σ_p⁻¹ Rᵀ) T x^p`.
    pub location: InformationGaussian3,
    /// `Σ R x^n`.
    pub normal_sum: Vector3<f64>,
    pub intensity_sum: f64,
    pub count: u32,
}

/// A single observation already mapped to the world frame.
#[derive(Clone, Copy, Debug)]
pub struct WorldObservation {
    pub point: Vector3<f64>,
    pub information: Matrix3<f64>,
    pub normal: UnitVec3,
    pub intensity: f64,
    pub gradient: f64,
}

impl ObservationSums {
    pub fn add(&mut self, obs: &WorldObservation) {
        self.location
            .accumulate(&InformationGaussian3::centred(obs.information, &obs.point));
        self.normal_sum += obs.normal.into_inner();
        self.intensity_sum += obs.intensity;
        self.count += 1;
    }

    pub fn mean_intensity(&self) -> Option<f64> {
        (self.count > 0).then(|| self.intensity_sum / self.count as f64)
    }
}

/// Running sums over post-burn-in Gibbs samples.
#[derive(Clone, Debug, Default)]
pub struct SampleStats {
    pub position_sum: Vector3<f64>,
    pub position_outer: Matrix3<f64>,
    pub normal_sum: Vector3<f64>,
    pub count: u32,
    pub labels: TopLabels,
    retained: Option<Vec<(Vector3<f64>, UnitVec3)>>,
}

impl SampleStats {
    /// Keeps every sample for batch cross-checks.
    pub fn retaining() -> Self {
        Self {
            retained: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn record(&mut self, position: &Vector3<f64>, normal: &UnitVec3, label: ClusterId) {
        self.position_sum += position;
        self.position_outer += position * position.transpose();
        self.normal_sum += normal.into_inner();
        self.count += 1;
        self.labels.record(label);
        if let Some(r) = self.retained.as_mut() {
            r.push((*position, *normal));
        }
    }

    pub fn retained(&self) -> Option<&[(Vector3<f64>, UnitVec3)]> {
        self.retained.as_deref()
    }

    pub fn mean_position(&self) -> Option<Vector3<f64>> {
        (self.count > 0).then(|| self.position_sum / self.count as f64)
    }

    /// `Σξξᵀ/|S| − p̄p̄ᵀ`.
    pub fn position_covariance(&self) -> Option<Matrix3<f64>> {
        let mean = self.mean_position()?;
        let cov = self.position_outer / self.count as f64 - mean * mean.transpose();
        Some((cov + cov.transpose()) * 0.5)
    }

    pub fn position_gaussian(&self) -> Option<Gaussian3> {
        Some(Gaussian3::new(self.mean_position()?, self.position_covariance()?))
    }

    pub fn mean_normal(&self) -> Option<UnitVec3> {
        UnitVec3::try_new(self.normal_sum, 1e-12)
    }
}
