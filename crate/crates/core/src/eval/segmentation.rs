use std::collections::{BTreeMap, BTreeSet};

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label counts above which the assignment is matched greedily.
pub const HUNGARIAN_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    /// Fraction of items whose label maps to their true segment under the
    /// best one-to-one label matching.
    pub accuracy: f64,
    /// Distinct predicted labels.
    pub clusters: usize,
    pub segments: usize,
    /// `(predicted label, true segment)` pairs of the matching.
    pub matching: Vec<(u32, u32)>,
    /// The matching was computed greedily instead of optimally.
    pub greedy: bool,
}

/// Accuracy of `predicted` against `truth` (paired by index), maximised over
/// one-to-one matchings of predicted labels to true segments.
pub fn evaluate_segmentation(predicted: &[u32], truth: &[u32]) -> Result<SegmentationReport> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predicted labels for {} ground-truth segments",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("no labelled items to evaluate"));
    }
    let index = |values: &[u32]| -> BTreeMap<u32, usize> {
        let distinct: BTreeSet<u32> = values.iter().copied().collect();
        distinct.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    let labels = index(predicted);
    let segments = index(truth);
    let n = labels.len().max(segments.len());
    let mut confusion = Matrix::new(n, n, 0i64);
    for (p, t) in predicted.iter().zip(truth) {
        confusion[(labels[p], segments[t])] += 1;
    }
    let greedy = n > HUNGARIAN_LIMIT;
    let assignment: Vec<(usize, usize)> = if greedy {
        log::warn!("{n} labels exceed {HUNGARIAN_LIMIT}; matching greedily");
        greedy_matching(&confusion)
    } else {
        let (_, cols) = kuhn_munkres(&confusion);
        cols.into_iter().enumerate().collect()
    };
    let label_of: Vec<u32> = labels.keys().copied().collect();
    let segment_of: Vec<u32> = segments.keys().copied().collect();
    let mut matched = 0i64;
    let mut matching = Vec::new();
    for (r, c) in assignment {
        if r < label_of.len() && c < segment_of.len() {
            matched += confusion[(r, c)];
            matching.push((label_of[r], segment_of[c]));
        }
    }
    Ok(SegmentationReport {
        accuracy: matched as f64 / predicted.len() as f64,
        clusters: labels.len(),
        segments: segments.len(),
        matching,
        greedy,
    })
}

/// Repeatedly takes the largest remaining cell of the confusion matrix.
fn greedy_matching(confusion: &Matrix<i64>) -> Vec<(usize, usize)> {
    let mut cells: Vec<(i64, usize, usize)> = (0..confusion.rows)
        .flat_map(|r| (0..confusion.columns).map(move |c| (r, c)))
        .map(|(r, c)| (confusion[(r, c)], r, c))
        .filter(|cell| cell.0 > 0)
        .collect();
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_used = vec![false; confusion.rows];
    let mut col_used = vec![false; confusion.columns];
    let mut out = Vec::new();
    for (_, r, c) in cells {
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            out.push((r, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Best accuracy over every injective relabelling, by enumeration.
    fn brute_force(predicted: &[u32], truth: &[u32]) -> f64 {
        let labels: Vec<u32> = predicted.iter().copied().sorted().dedup().collect();
        let segments: Vec<u32> = truth.iter().copied().sorted().dedup().collect();
        let slots = labels.len().max(segments.len());
        let mut best = 0usize;
        for perm in (0..slots).permutations(labels.len()) {
            let hits = predicted
                .iter()
                .zip(truth)
                .filter(|(p, t)| {
                    let li = labels.iter().position(|l| l == *p).unwrap();
                    segments.get(perm[li]) == Some(*t)
                })
                .count();
            best = best.max(hits);
        }
        best as f64 / predicted.len() as f64
    }

    #[test]
    fn perfect_labelling_scores_one() {
        let truth: Vec<u32> = (0..90).map(|i| i % 3).collect();
        let r = evaluate_segmentation(&truth, &truth).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.clusters, 3);
        assert!(!r.greedy);
    }

    #[test]
    fn permuted_labels_score_one() {
        let truth: Vec<u32> = (0..90).map(|i| i % 3).collect();
        let predicted: Vec<u32> = truth.iter().map(|t| [17, 4, 9][*t as usize]).collect();
        let r = evaluate_segmentation(&predicted, &truth).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r.matching.contains(&(17, 0)) && r.matching.contains(&(4, 1)) && r.matching.contains(&(9, 2)));
    }

    #[test]
    fn random_labels_match_simulated_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truth: Vec<u32> = (0..300).map(|i| i % 3).collect();
        let trials = 200;
        let mut total = 0.0;
        for _ in 0..trials {
            let predicted: Vec<u32> = (0..truth.len()).map(|_| rng.random_range(0..3)).collect();
            let r = evaluate_segmentation(&predicted, &truth).unwrap();
            assert!((r.accuracy - brute_force(&predicted, &truth)).abs() < 1e-12);
            total += r.accuracy;
        }
        let mean = total / trials as f64;
        assert!(mean > 1.0 / 3.0 && mean < 0.4, "mean {mean}");
    }

    proptest! {
        #[test]
        fn hungarian_equals_exhaustive_search(
            pairs in proptest::collection::vec((0u32..4, 0u32..4), 1..60)
        ) {
            let (p, t): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
            let r = evaluate_segmentation(&p, &t).unwrap();
            prop_assert!((r.accuracy - brute_force(&p, &t)).abs() < 1e-12);
        }
    }

    #[test]
    fn many_labels_fall_back_to_greedy() {
        let truth: Vec<u32> = (0..200).map(|i| i % 2).collect();
        let predicted: Vec<u32> = (0..200).collect();
        let r = evaluate_segmentation(&predicted, &truth).unwrap();
        assert!(r.greedy);
        assert_eq!(r.clusters, 200);
        assert!((r.accuracy - 2.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(evaluate_segmentation(&[0, 1], &[0]).is_err());
        assert!(evaluate_segmentation(&[], &[]).is_err());
    }
}
