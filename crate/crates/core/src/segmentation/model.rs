use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{ClusterId, VmfPrior};
use crate::math::UnitVec3;

/// Constants of the directional model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// DP concentration α.
    pub alpha: f64,
    /// Prior pseudo-counts a.
    pub a: f64,
    /// Prior concentration-mode weight b.
    pub b: f64,
    /// Prior mode μ₀ (normalised on use).
    pub mu0: [f64; 3],
    /// MRF weight λ.
    pub lambda: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            a: 1.0,
            b: 0.3,
            mu0: [0.0, 0.0, 1.0],
            lambda: 1.0,
        }
    }
}

impl SegmentationConfig {
    pub fn prior(&self) -> VmfPrior {
        VmfPrior {
            mu0: UnitVec3::new_normalize(Vector3::from(self.mu0)),
            a: self.a,
            b: self.b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub mode: UnitVec3,
    pub concentration: f64,
    /// Number of surfels carrying this label.
    pub count: usize,
}

/// vMF clusters with stable ids plus the DP and MRF constants.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalModel {
    clusters: BTreeMap<ClusterId, Cluster>,
    next_id: ClusterId,
    pub alpha: f64,
    pub prior: VmfPrior,
    pub lambda: f64,
}

impl DirectionalModel {
    pub fn new(alpha: f64, prior: VmfPrior, lambda: f64) -> Self {
        Self {
            clusters: BTreeMap::new(),
            next_id: 0,
            alpha,
            prior,
            lambda,
        }
    }

    pub fn from_config(config: &SegmentationConfig) -> Self {
        Self::new(config.alpha, config.prior(), config.lambda)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn get(&self, id: ClusterId) -> Option<&Cluster> {
        self.clusters.get(&id)
    }

    pub fn get_mut(&mut self, id: ClusterId) -> Option<&mut Cluster> {
        self.clusters.get_mut(&id)
    }

    /// Clusters in id order.
    pub fn iter(&self) -> impl Iterator<Item = (ClusterId, &Cluster)> {
        self.clusters.iter().map(|(k, v)| (*k, v))
    }

    pub fn ids(&self) -> Vec<ClusterId> {
        self.clusters.keys().copied().collect()
    }

    pub fn total_count(&self) -> usize {
        self.clusters.values().map(|c| c.count).sum()
    }

    /// Adds an empty cluster and returns its id.
    pub fn create(&mut self, mode: UnitVec3, concentration: f64) -> ClusterId {
        let id = self.next_id;
        self.next_id += 1;
        self.clusters.insert(
            id,
            Cluster {
                mode,
                concentration,
                count: 0,
            },
        );
        id
    }

    pub fn increment(&mut self, id: ClusterId) {
        if let Some(c) = self.clusters.get_mut(&id) {
            c.count += 1;
        }
    }

    pub fn decrement(&mut self, id: ClusterId) {
        if let Some(c) = self.clusters.get_mut(&id) {
            c.count = c.count.saturating_sub(1);
        }
    }

    /// Removes clusters without members; returns their ids.
    pub fn collect_garbage(&mut self) -> Vec<ClusterId> {
        let dead: Vec<ClusterId> = self
            .clusters
            .iter()
            .filter(|(_, c)| c.count == 0)
            .map(|(k, _)| *k)
            .collect();
        for id in &dead {
            self.clusters.remove(id);
        }
        dead
    }

    /// Resets every count from the given labels.
    pub fn reconcile(&mut self, labels: impl IntoIterator<Item = ClusterId>) {
        for c in self.clusters.values_mut() {
            c.count = 0;
        }
        for l in labels {
            self.increment(l);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable_across_garbage_collection() {
        let mut m = DirectionalModel::from_config(&SegmentationConfig::default());
        let a = m.create(Vector3::z_axis(), 10.0);
        let b = m.create(Vector3::x_axis(), 10.0);
        m.increment(b);
        assert_eq!(m.collect_garbage(), vec![a]);
        let c = m.create(Vector3::y_axis(), 1.0);
        assert!(c > b);
        m.reconcile([b, b, c]);
        assert_eq!(m.get(b).unwrap().count, 2);
        assert_eq!(m.get(c).unwrap().count, 1);
        assert_eq!(m.total_count(), 3);
    }
}
