use rand::Rng;

use super::associate::mark_disc;
use super::{Frame, Image};

/// Picks up to `budget` uncovered pixels with probability proportional to
/// `ε + ‖∇I‖₂`, where `ε = epsilon_ratio · max‖∇I‖₂`. Accepted seeds cover a
/// disc of `min_spacing_px` so seeds do not stack. Pixels within `margin`
/// of the border and pixels without valid depth are never chosen.
pub fn extract_new_surfels<R: Rng + ?Sized>(
    frame: &Frame,
    coverage: &Image<bool>,
    budget: usize,
    epsilon_ratio: f64,
    min_spacing_px: f64,
    margin: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    if budget == 0 {
        return Vec::new();
    }
    let (w, h) = (frame.width(), frame.height());
    let max_grad = frame.gradient.data.iter().cloned().fold(0.0f32, f32::max) as f64;
    let eps = if max_grad > 0.0 { epsilon_ratio * max_grad } else { 1.0 };
    // weighted sampling without replacement via exponential keys ln(u)/w
    let mut keyed: Vec<(f64, u32)> = Vec::new();
    for v in margin..h.saturating_sub(margin) {
        for u in margin..w.saturating_sub(margin) {
            if coverage.get(u, v) || frame.depth_at(u, v).is_none() {
                continue;
            }
            let weight = eps + frame.gradient.get(u, v) as f64;
            let r: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            keyed.push((r.ln() / weight, (v * w + u) as u32));
        }
    }
    keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut taken = coverage.clone();
    let mut seeds = Vec::with_capacity(budget);
    for (_, idx) in keyed {
        let (u, v) = (idx as usize % w, idx as usize / w);
        if taken.get(u, v) {
            continue;
        }
        mark_disc(&mut taken, (u, v), min_spacing_px);
        seeds.push((u, v));
        if seeds.len() == budget {
            break;
        }
    }
    seeds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::Intrinsics;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(intensity: Image<f32>) -> Frame {
        let k = Intrinsics {
            width: intensity.width,
            height: intensity.height,
            cx: intensity.width as f64 / 2.0,
            cy: intensity.height as f64 / 2.0,
            ..Intrinsics::vga()
        };
        let depth = Image::filled(k.width, k.height, 1.5);
        Frame::new(0.0, k, intensity, depth, None)
    }

    #[test]
    fn covered_frame_yields_nothing() {
        let f = frame(Image::filled(40, 30, 0.5));
        let cov = Image::filled(40, 30, true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(extract_new_surfels(&f, &cov, 100, 0.05, 3.0, 2, &mut rng).is_empty());
    }

    #[test]
    fn flat_intensity_samples_uniformly() {
        let f = frame(Image::filled(80, 60, 0.5));
        let cov = Image::filled(80, 60, false);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut left = 0;
        let mut total = 0;
        for _ in 0..20 {
            let seeds = extract_new_surfels(&f, &cov, 20, 0.05, 1.0, 0, &mut rng);
            total += seeds.len();
            left += seeds.iter().filter(|s| s.0 < 40).count();
        }
        let frac = left as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.08, "{frac}");
    }

    #[test]
    fn checkerboard_seeds_concentrate_on_edges() {
        let sq = 16;
        let img = Image::from_fn(160, 128, |u, v| if ((u / sq) + (v / sq)) % 2 == 0 { 0.2 } else { 0.8 });
        let f = frame(img);
        let cov = Image::filled(160, 128, false);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seeds = extract_new_surfels(&f, &cov, 100, 0.05, 3.0, 2, &mut rng);
        assert_eq!(seeds.len(), 100);
        let near_edge = |x: usize| {
            let m = x % sq;
            m <= 1 || m >= sq - 2
        };
        let hits = seeds.iter().filter(|&&(u, v)| near_edge(u) || near_edge(v)).count();
        assert!(hits >= 70, "{hits}");
    }
}
