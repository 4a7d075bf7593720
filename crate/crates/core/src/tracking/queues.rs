use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::frontend::Intrinsics;
use crate::map::MapSnapshot;
use crate::math::Se3;
use crate::segmentation::ClusterId;

/// Candidate surfels grouped by most-likely segment, each queue sorted by
/// decreasing image gradient. Entries are indices into the snapshot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentQueues {
    queues: Vec<(ClusterId, Vec<usize>)>,
}

impl SegmentQueues {
    /// Surfels of `snapshot` that project into the image and face the
    /// camera under `pose`.
    pub fn visible(snapshot: &MapSnapshot, intrinsics: &Intrinsics, pose: &Se3) -> Vec<usize> {
        snapshot
            .surfels
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let q = pose.inverse_transform_point(&s.position);
                let n = pose.rotation.inverse() * s.normal.into_inner();
                n.dot(&q) < 0.0 && intrinsics.project(&q).is_some_and(|uv| intrinsics.contains(&uv))
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn direction_aware(snapshot: &MapSnapshot, candidates: &[usize]) -> Self {
        let mut groups: BTreeMap<ClusterId, Vec<usize>> = BTreeMap::new();
        for &i in candidates {
            groups.entry(snapshot.surfels[i].label).or_default().push(i);
        }
        let queues = groups
            .into_iter()
            .map(|(label, mut list)| {
                list.sort_by(|&a, &b| {
                    let (sa, sb) = (&snapshot.surfels[a], &snapshot.surfels[b]);
                    sb.gradient.total_cmp(&sa.gradient).then(sa.id.cmp(&sb.id))
                });
                (label, list)
            })
            .collect();
        Self { queues }
    }

    /// One queue holding the candidates in random order.
    pub fn random<R: Rng + ?Sized>(candidates: &[usize], rng: &mut R) -> Self {
        let mut list = candidates.to_vec();
        list.shuffle(rng);
        Self {
            queues: vec![(0, list)],
        }
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(|(_, q)| q.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segments(&self) -> usize {
        self.queues.len()
    }

    pub fn queue(&self, label: ClusterId) -> Option<&[usize]> {
        self.queues.iter().find(|(l, _)| *l == label).map(|(_, q)| q.as_slice())
    }

    pub fn round_robin(&self) -> RoundRobin<'_> {
        RoundRobin {
            queues: self,
            cursors: vec![0; self.queues.len()],
            turn: 0,
        }
    }
}

/// Cursor state for drawing one accepted candidate per queue in turn.
pub struct RoundRobin<'a> {
    queues: &'a SegmentQueues,
    cursors: Vec<usize>,
    turn: usize,
}

impl RoundRobin<'_> {
    /// Next candidate accepted by `valid`, taken from the queue whose turn it
    /// is. Rejected candidates are skipped; exhausted queues pass their turn.
    pub fn next_valid(&mut self, mut valid: impl FnMut(usize) -> bool) -> Option<usize> {
        let n = self.queues.queues.len();
        for _ in 0..n {
            let q = self.turn;
            let list = &self.queues.queues[q].1;
            while self.cursors[q] < list.len() {
                let candidate = list[self.cursors[q]];
                self.cursors[q] += 1;
                if valid(candidate) {
                    self.turn = (q + 1) % n;
                    return Some(candidate);
                }
            }
            self.turn = (q + 1) % n;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::SurfelEstimate;
    use crate::math::UnitVec3;
    use nalgebra::{Matrix3, Vector3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn snapshot(entries: &[(ClusterId, f64)]) -> MapSnapshot {
        let surfels = entries
            .iter()
            .enumerate()
            .map(|(i, &(label, gradient))| SurfelEstimate {
                id: i as u32,
                position: Vector3::new(0.0, 0.0, 1.0),
                covariance: Matrix3::zeros(),
                normal: UnitVec3::new_normalize(-Vector3::z()),
                label,
                intensity: 0.5,
                rgb: [0; 3],
                radius: 0.01,
                gradient,
                entropy: 0.0,
                samples: 0,
                observations: 1,
            })
            .collect();
        MapSnapshot { version: 0, surfels }
    }

    #[test]
    fn every_candidate_is_in_exactly_one_sorted_queue() {
        let snap = snapshot(&[(2, 0.1), (1, 0.5), (2, 0.9), (1, 0.2), (7, 0.3)]);
        let all: Vec<usize> = (0..5).collect();
        let q = SegmentQueues::direction_aware(&snap, &all);
        assert_eq!(q.segments(), 3);
        assert_eq!(q.len(), 5);
        assert_eq!(q.queue(2).unwrap(), &[2, 0]);
        assert_eq!(q.queue(1).unwrap(), &[1, 3]);
    }

    #[test]
    fn round_robin_alternates_and_skips_rejected() {
        let snap = snapshot(&[(0, 0.9), (0, 0.8), (0, 0.7), (1, 0.9), (1, 0.8)]);
        let q = SegmentQueues::direction_aware(&snap, &(0..5).collect::<Vec<_>>());
        let mut rr = q.round_robin();
        let mut order = Vec::new();
        while let Some(i) = rr.next_valid(|i| i != 3) {
            order.push(i);
        }
        assert_eq!(order, vec![0, 4, 1, 2]);
    }

    #[test]
    fn random_queue_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = SegmentQueues::random(&[4, 8, 15, 16, 23, 42], &mut rng);
        let mut all = q.queue(0).unwrap().to_vec();
        all.sort();
        assert_eq!(all, vec![4, 8, 15, 16, 23, 42]);
    }

    #[test]
    fn visibility_filters_back_facing_and_out_of_view() {
        let mut snap = snapshot(&[(0, 0.0), (0, 0.0), (0, 0.0)]);
        snap.surfels[1].normal = UnitVec3::new_normalize(Vector3::z());
        snap.surfels[2].position = Vector3::new(10.0, 0.0, 1.0);
        let vis = SegmentQueues::visible(&snap, &Intrinsics::vga(), &Se3::identity());
        assert_eq!(vis, vec![0]);
    }
}
