use nalgebra::Vector3;

use super::{Image, Intrinsics};

/// Valid depth range in metres; anything outside is treated as missing.
pub const MIN_DEPTH: f64 = 0.1;
pub const MAX_DEPTH: f64 = 10.0;

/// One RGB-D frame. Depth is in metres with 0 marking invalid pixels.
#[derive(Clone, Debug)]
pub struct Frame {
    pub timestamp: f64,
    pub intrinsics: Intrinsics,
    pub intensity: Image<f32>,
    pub depth: Image<f32>,
    pub rgb: Option<Image<[u8; 3]>>,
    /// ‖∇I‖₂ by central differences on `intensity`.
    pub gradient: Image<f32>,
}

impl Frame {
    pub fn new(
        timestamp: f64,
        intrinsics: Intrinsics,
        intensity: Image<f32>,
        mut depth: Image<f32>,
        rgb: Option<Image<[u8; 3]>>,
    ) -> Self {
        assert_eq!(intensity.width, intrinsics.width);
        assert_eq!(intensity.height, intrinsics.height);
        assert_eq!(depth.width, intrinsics.width);
        assert_eq!(depth.height, intrinsics.height);
        for d in depth.data.iter_mut() {
            let z = *d as f64;
            if !(MIN_DEPTH..=MAX_DEPTH).contains(&z) {
                *d = 0.0;
            }
        }
        let gradient = intensity.gradient_magnitude();
        Self {
            timestamp,
            intrinsics,
            intensity,
            depth,
            rgb,
            gradient,
        }
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn depth_at(&self, u: usize, v: usize) -> Option<f64> {
        let z = self.depth.get(u, v);
        (z > 0.0).then_some(z as f64)
    }

    /// Back-projected camera-frame point at a pixel.
    pub fn point_at(&self, u: usize, v: usize) -> Option<Vector3<f64>> {
        self.depth_at(u, v)
            .map(|z| self.intrinsics.backproject(u as f64, v as f64, z))
    }

    /// Next pyramid level: intensity box-averaged, depth averaged where the
    /// 2×2 block is valid and locally consistent.
    pub fn half(&self) -> Frame {
        let depth = Image::from_fn(self.width() / 2, self.height() / 2, |u, v| {
            let zs = [
                self.depth.get(2 * u, 2 * v),
                self.depth.get(2 * u + 1, 2 * v),
                self.depth.get(2 * u, 2 * v + 1),
                self.depth.get(2 * u + 1, 2 * v + 1),
            ];
            if zs.iter().any(|&z| z <= 0.0) {
                return 0.0;
            }
            let lo = zs.iter().cloned().fold(f32::INFINITY, f32::min);
            let hi = zs.iter().cloned().fold(0.0, f32::max);
            let mean = 0.25 * zs.iter().sum::<f32>();
            if hi - lo > 0.03 * mean {
                0.0
            } else {
                mean
            }
        });
        let intensity = self.intensity.half_sample();
        let gradient = intensity.gradient_magnitude();
        Frame {
            timestamp: self.timestamp,
            intrinsics: self.intrinsics.half(),
            intensity,
            depth,
            rgb: None,
            gradient,
        }
    }

    /// `[level0, level1, …]`.
    pub fn pyramid(&self, levels: usize) -> Vec<Frame> {
        let mut out = vec![self.clone()];
        for _ in 1..levels.max(1) {
            let next = out.last().expect("non-empty").half();
            out.push(next);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_range_depth_is_invalidated() {
        let k = Intrinsics {
            width: 4,
            height: 2,
            ..Intrinsics::vga()
        };
        let depth = Image {
            width: 4,
            height: 2,
            data: vec![0.05, 1.0, 12.0, 2.0, 0.0, 9.9, 0.1, 10.0],
        };
        let f = Frame::new(0.0, k, Image::filled(4, 2, 0.5), depth, None);
        assert_eq!(f.depth.data, vec![0.0, 1.0, 0.0, 2.0, 0.0, 9.9, 0.1, 10.0]);
    }

    #[test]
    fn half_rejects_inconsistent_blocks() {
        let k = Intrinsics {
            width: 4,
            height: 2,
            ..Intrinsics::vga()
        };
        let depth = Image {
            width: 4,
            height: 2,
            data: vec![1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0],
        };
        let f = Frame::new(0.0, k, Image::filled(4, 2, 0.5), depth, None);
        let h = f.half();
        assert_eq!(h.depth.data, vec![1.0, 0.0]);
    }
}
