use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::frontend::{nearest_timestamp, MAX_TIME_DIFFERENCE};
use crate::math::Se3;
use crate::{Error, Result};

/// Absolute trajectory error after rigid alignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    /// Root-mean-square translational error (m).
    pub rmse: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// `(estimate timestamp, translational error)` per matched pose.
    pub errors: Vec<(f64, f64)>,
    /// Rigid transform mapping estimated positions onto ground truth.
    pub alignment: Se3,
}

/// Least-squares rigid transform `T` minimising `Σ ‖T·source_i − target_i‖²`
/// (Umeyama with the scale fixed to one).
pub fn align_rigid(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> Se3 {
    assert_eq!(source.len(), target.len());
    let n = source.len() as f64;
    if source.is_empty() {
        return Se3::identity();
    }
    let mu_s = source.iter().sum::<Vector3<f64>>() / n;
    let mu_t = target.iter().sum::<Vector3<f64>>() / n;
    let h: Matrix3<f64> = source
        .iter()
        .zip(target)
        .map(|(s, t)| (s - mu_s) * (t - mu_t).transpose())
        .sum();
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v * d * u.transpose();
    Se3::from_matrix_parts(&r, mu_t - r * mu_s)
}

/// Associates estimated and ground-truth poses by nearest timestamp
/// (within 0.02 s), aligns the positions rigidly and reports the residual
/// translational errors.
pub fn evaluate_ate(estimated: &[(f64, Se3)], ground_truth: &[(f64, Se3)]) -> Result<TrajectoryReport> {
    let mut gt: Vec<&(f64, Se3)> = ground_truth.iter().collect();
    gt.sort_by(|a, b| a.0.total_cmp(&b.0));
    let times: Vec<f64> = gt.iter().map(|g| g.0).collect();
    let mut stamps = Vec::new();
    let mut source = Vec::new();
    let mut target = Vec::new();
    for (t, pose) in estimated {
        if let Some(j) = nearest_timestamp(&times, *t, MAX_TIME_DIFFERENCE) {
            stamps.push(*t);
            source.push(pose.translation);
            target.push(gt[j].1.translation);
        }
    }
    if source.is_empty() {
        return Err(Error::invalid("estimated and ground-truth trajectories share no timestamps"));
    }
    if source.len() < 2 {
        return Err(Error::invalid("at least two matched timestamps are required"));
    }
    let alignment = align_rigid(&source, &target);
    let errors: Vec<(f64, f64)> = stamps
        .iter()
        .zip(source.iter().zip(&target))
        .map(|(&t, (s, g))| (t, (alignment.transform_point(s) - g).norm()))
        .collect();
    let n = errors.len() as f64;
    let rmse = (errors.iter().map(|e| e.1 * e.1).sum::<f64>() / n).sqrt();
    let mean = errors.iter().map(|e| e.1).sum::<f64>() / n;
    let mut sorted: Vec<f64> = errors.iter().map(|e| e.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    Ok(TrajectoryReport {
        rmse,
        mean,
        median,
        max: sorted[sorted.len() - 1],
        errors,
        alignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn circle(n: usize) -> Vec<(f64, Se3)> {
        (0..n)
            .map(|i| {
                let a = i as f64 * 0.05;
                let p = Vector3::new(a.cos(), a.sin(), 0.1 * a);
                (i as f64 / 30.0, Se3::new(UnitQuaternion::from_euler_angles(0.0, 0.0, a), p))
            })
            .collect()
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let t = circle(50);
        let r = evaluate_ate(&t, &t).unwrap();
        assert!(r.rmse < 1e-12);
        assert_eq!(r.errors.len(), 50);
    }

    proptest! {
        #[test]
        fn rigid_offset_is_absorbed(rx in -3.0f64..3.0, ry in -1.5f64..1.5, rz in -3.0f64..3.0,
                                    tx in -5.0f64..5.0, ty in -5.0f64..5.0, tz in -5.0f64..5.0) {
            let gt = circle(40);
            let offset = Se3::new(UnitQuaternion::from_euler_angles(rx, ry, rz), Vector3::new(tx, ty, tz));
            let est: Vec<(f64, Se3)> = gt.iter().map(|(t, p)| (*t, offset.compose(p))).collect();
            let r = evaluate_ate(&est, &gt).unwrap();
            prop_assert!(r.rmse < 1e-9, "rmse {}", r.rmse);
            prop_assert!(r.alignment.orthonormality_error() < 1e-9);
            prop_assert!((r.alignment.rotation_matrix().determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_perturbation_gives_expected_rmse() {
        let gt = circle(500);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = 0.01 / 3f64.sqrt();
        let est: Vec<(f64, Se3)> = gt
            .iter()
            .map(|(t, p)| {
                let e = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng)) * sigma;
                (*t, Se3::new(p.rotation, p.translation + e))
            })
            .collect();
        let r = evaluate_ate(&est, &gt).unwrap();
        assert!(r.rmse >= 0.008 && r.rmse <= 0.012, "rmse {}", r.rmse);
    }

    #[test]
    fn timestamps_are_matched_within_tolerance() {
        let gt = circle(20);
        let est: Vec<(f64, Se3)> = gt.iter().map(|(t, p)| (t + 0.01, *p)).collect();
        assert_eq!(evaluate_ate(&est, &gt).unwrap().errors.len(), 20);
        let far: Vec<(f64, Se3)> = gt.iter().map(|(t, p)| (t + 100.0, *p)).collect();
        assert!(evaluate_ate(&far, &gt).is_err());
        assert!(evaluate_ate(&gt[..1], &gt).is_err());
    }

    #[test]
    fn report_is_ordered() {
        let gt = circle(30);
        let est: Vec<(f64, Se3)> = gt
            .iter()
            .enumerate()
            .map(|(i, (t, p))| (*t, Se3::new(p.rotation, p.translation + Vector3::x() * 0.001 * (i % 5) as f64)))
            .collect();
        let r = evaluate_ate(&est, &gt).unwrap();
        assert!(r.rmse >= 0.0 && r.mean <= r.rmse + 1e-15 && r.median <= r.max && r.rmse <= r.max);
    }
}
