use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Pinhole intrinsics. Pixel `(u, v)` has its centre at integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    /// The usual 640×480 RGB-D calibration.
    pub fn vga() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
            width: 640,
            height: 480,
        }
    }

    pub fn project(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        if p.z <= 1e-9 {
            return None;
        }
        Some(Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }

    pub fn contains(&self, uv: &Vector2<f64>) -> bool {
        uv.x > -0.5
            && uv.y > -0.5
            && uv.x < self.width as f64 - 0.5
            && uv.y < self.height as f64 - 0.5
    }

    /// Nearest pixel to a continuous image location.
    pub fn nearest_pixel(&self, uv: &Vector2<f64>) -> Option<(usize, usize)> {
        if !self.contains(uv) {
            return None;
        }
        let u = (uv.x.round() as isize).clamp(0, self.width as isize - 1) as usize;
        let v = (uv.y.round() as isize).clamp(0, self.height as isize - 1) as usize;
        Some((u, v))
    }

    /// Intrinsics of a 2× half-sampled image.
    pub fn half(&self) -> Self {
        Self {
            fx: self.fx * 0.5,
            fy: self.fy * 0.5,
            cx: (self.cx + 0.5) * 0.5 - 0.5,
            cy: (self.cy + 0.5) * 0.5 - 0.5,
            width: self.width / 2,
            height: self.height / 2,
        }
    }

    pub fn mean_focal(&self) -> f64 {
        0.5 * (self.fx + self.fy)
    }

    /// Direction of the viewing ray through a pixel, in the camera frame.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}
