/// Row-major image buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Image<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> T {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: T) {
        self.data[v * self.width + u] = value;
    }

    pub fn get_signed(&self, u: isize, v: isize) -> Option<T> {
        if u < 0 || v < 0 || u as usize >= self.width || v as usize >= self.height {
            None
        } else {
            Some(self.get(u as usize, v as usize))
        }
    }
}

/// Bilinear sample with its derivative along `u` and `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearSample {
    pub value: f64,
    pub du: f64,
    pub dv: f64,
}

impl Image<f32> {
    /// Bilinear interpolation; `None` when the 2×2 support leaves the image.
    /// The derivatives are those of the interpolant inside the current cell.
    pub fn bilinear(&self, u: f64, v: f64) -> Option<BilinearSample> {
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let u0 = u.floor() as usize;
        let v0 = v.floor() as usize;
        if u0 + 1 >= self.width || v0 + 1 >= self.height {
            return None;
        }
        let a = u - u0 as f64;
        let b = v - v0 as f64;
        let i00 = self.get(u0, v0) as f64;
        let i10 = self.get(u0 + 1, v0) as f64;
        let i01 = self.get(u0, v0 + 1) as f64;
        let i11 = self.get(u0 + 1, v0 + 1) as f64;
        let value = (1.0 - a) * (1.0 - b) * i00 + a * (1.0 - b) * i10 + (1.0 - a) * b * i01 + a * b * i11;
        let du = (1.0 - b) * (i10 - i00) + b * (i11 - i01);
        let dv = (1.0 - a) * (i01 - i00) + a * (i11 - i10);
        Some(BilinearSample { value, du, dv })
    }

    /// Central-difference gradient magnitude (one-sided at the border).
    pub fn gradient_magnitude(&self) -> Image<f32> {
        let (w, h) = (self.width, self.height);
        Image::from_fn(w, h, |u, v| {
            let gx = if w < 2 {
                0.0
            } else if u == 0 {
                self.get(1, v) - self.get(0, v)
            } else if u == w - 1 {
                self.get(u, v) - self.get(u - 1, v)
            } else {
                0.5 * (self.get(u + 1, v) - self.get(u - 1, v))
            };
            let gy = if h < 2 {
                0.0
            } else if v == 0 {
                self.get(u, 1) - self.get(u, 0)
            } else if v == h - 1 {
                self.get(u, v) - self.get(u, v - 1)
            } else {
                0.5 * (self.get(u, v + 1) - self.get(u, v - 1))
            };
            (gx * gx + gy * gy).sqrt()
        })
    }

    /// 2×2 box average.
    pub fn half_sample(&self) -> Image<f32> {
        Image::from_fn(self.width / 2, self.height / 2, |u, v| {
            0.25 * (self.get(2 * u, 2 * v)
                + self.get(2 * u + 1, 2 * v)
                + self.get(2 * u, 2 * v + 1)
                + self.get(2 * u + 1, 2 * v + 1))
        })
    }
}
