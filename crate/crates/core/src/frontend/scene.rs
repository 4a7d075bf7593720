//! Plain-text synthetic scenes: textured rectangles and boxes plus a
//! ground-truth camera trajectory.
//!
//! ```text
//! # comment
//! intrinsics 525 525 319.5 239.5 640 480
//! plane origin=0,0,0 normal=0,0,1 extent=2,2 texture=sine:0.2 segment=0
//! box center=0.5,0.5,0.25 size=0.4,0.4,0.5 texture=noise:0.05:7 segment=3
//! orbit center=0,0,0.3 radius=1.6 height=1.2 start=200 step=0.3
//! ```
//!
//! Box faces receive segments `s, s+1, …, s+5` in the order +x, −x, +y, −y,
//! +z, −z. Trajectories are one of `orbit`, `static` or `linear`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::Intrinsics;
use crate::math::{orthonormal_basis, Se3, UnitVec3};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Texture {
    Constant(f64),
    /// Hard checkerboard of the given square size (m).
    Checker(f64),
    /// Sinusoid varying only along the patch `u` axis (anisotropic).
    Stripes(f64),
    /// Product of sinusoids along `u` and `v`.
    Sine(f64),
    /// Smooth value noise with lattice spacing (m) and seed.
    Noise(f64, u64),
}

impl Texture {
    /// Intensity in `[0, 1]` at patch coordinates `(s, t)` in metres.
    pub fn sample(&self, s: f64, t: f64) -> f64 {
        use std::f64::consts::TAU;
        match *self {
            Texture::Constant(c) => c,
            Texture::Checker(size) => {
                let parity = ((s / size).floor() as i64 + (t / size).floor() as i64).rem_euclid(2);
                if parity == 0 {
                    0.2
                } else {
                    0.8
                }
            }
            Texture::Stripes(period) => 0.5 + 0.4 * (TAU * s / period).sin(),
            Texture::Sine(period) => 0.5 + 0.4 * (TAU * s / period).sin() * (TAU * t / period).sin(),
            Texture::Noise(scale, seed) => 0.1 + 0.8 * value_noise(s / scale, t / scale, seed),
        }
    }
}

fn lattice(ix: i64, iy: i64, seed: u64) -> f64 {
    let mut h = (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ seed.wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let smooth = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
    let (sx, sy) = (smooth(fx), smooth(fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = lattice(ix, iy, seed);
    let b = lattice(ix + 1, iy, seed);
    let c = lattice(ix, iy + 1, seed);
    let d = lattice(ix + 1, iy + 1, seed);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

impl fmt::Display for Texture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Texture::Constant(c) => write!(f, "constant:{c}"),
            Texture::Checker(s) => write!(f, "checker:{s}"),
            Texture::Stripes(p) => write!(f, "stripes:{p}"),
            Texture::Sine(p) => write!(f, "sine:{p}"),
            Texture::Noise(s, seed) => write!(f, "noise:{s}:{seed}"),
        }
    }
}

impl FromStr for Texture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let mut num = || -> Result<f64, Error> {
            parts
                .next()
                .ok_or_else(|| Error::parse(format!("texture `{s}` is missing a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::parse(format!("texture `{s}`: {e}")))
        };
        Ok(match kind {
            "constant" => Texture::Constant(num()?),
            "checker" => Texture::Checker(num()?),
            "stripes" => Texture::Stripes(num()?),
            "sine" => Texture::Sine(num()?),
            "noise" => {
                let scale = num()?;
                let seed = num()? as u64;
                Texture::Noise(scale, seed)
            }
            other => return Err(Error::parse(format!("unknown texture `{other}`"))),
        })
    }
}

/// A textured rectangle centred on `origin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Patch {
    pub origin: Vector3<f64>,
    pub normal: UnitVec3,
    pub u_axis: Vector3<f64>,
    pub v_axis: Vector3<f64>,
    /// Half extents along `u_axis` and `v_axis`.
    pub half_extent: (f64, f64),
    pub texture: Texture,
    pub segment: u32,
}

impl Patch {
    pub fn new(
        origin: Vector3<f64>,
        normal: Vector3<f64>,
        extent: (f64, f64),
        texture: Texture,
        segment: u32,
    ) -> Self {
        let normal = UnitVec3::new_normalize(normal);
        let (u_axis, v_axis) = orthonormal_basis(&normal);
        Self {
            origin,
            normal,
            u_axis,
            v_axis,
            half_extent: (0.5 * extent.0, 0.5 * extent.1),
            texture,
            segment,
        }
    }

    pub fn with_u_axis(mut self, u: Vector3<f64>) -> Self {
        let n = self.normal.into_inner();
        let u = (u - n * n.dot(&u)).normalize();
        self.u_axis = u;
        self.v_axis = n.cross(&u);
        self
    }

    /// Ray parameter of the hit for `origin + t·dir`, if inside the rectangle.
    #[inline]
    pub fn intersect(&self, ray_origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot(&(self.origin - ray_origin)) / denom;
        if t <= 0.0 {
            return None;
        }
        let d = ray_origin + dir * t - self.origin;
        let (s, q) = (d.dot(&self.u_axis), d.dot(&self.v_axis));
        (s.abs() <= self.half_extent.0 && q.abs() <= self.half_extent.1).then_some(t)
    }

    pub fn intensity_at(&self, p: &Vector3<f64>) -> f64 {
        let d = p - self.origin;
        self.texture.sample(d.dot(&self.u_axis), d.dot(&self.v_axis))
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_extent.0 * self.half_extent.1
    }
}

/// Camera looking from `eye` at `target`, world up `+z`.
pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>) -> Se3 {
    let forward = (target - eye).normalize();
    let mut right = forward.cross(&Vector3::z());
    if right.norm() < 1e-9 {
        right = Vector3::x();
    }
    let right = right.normalize();
    let down = forward.cross(&right);
    let r = Matrix3::from_columns(&[right, down, forward]);
    Se3::from_matrix_parts(&r, *eye)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrajectorySpec {
    Static {
        eye: Vector3<f64>,
        target: Vector3<f64>,
    },
    /// Circle of `radius` at `height` around `center`, looking at `target`;
    /// `step_deg` of azimuth per frame.
    Orbit {
        center: Vector3<f64>,
        radius: f64,
        height: f64,
        start_deg: f64,
        step_deg: f64,
        target: Vector3<f64>,
    },
    /// Constant per-frame translation and yaw.
    Linear {
        eye: Vector3<f64>,
        target: Vector3<f64>,
        velocity: Vector3<f64>,
        yaw_rate_deg: f64,
    },
}

impl TrajectorySpec {
    pub fn pose(&self, frame: usize) -> Se3 {
        let k = frame as f64;
        match self {
            TrajectorySpec::Static { eye, target } => look_at(eye, target),
            TrajectorySpec::Orbit {
                center,
                radius,
                height,
                start_deg,
                step_deg,
                target,
            } => {
                let a = (start_deg + step_deg * k).to_radians();
                let eye = center + Vector3::new(radius * a.cos(), radius * a.sin(), *height);
                look_at(&eye, target)
            }
            TrajectorySpec::Linear {
                eye,
                target,
                velocity,
                yaw_rate_deg,
            } => {
                let base = look_at(eye, target);
                let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), (yaw_rate_deg * k).to_radians());
                Se3::new(yaw * base.rotation, eye + velocity * k)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub intrinsics: Intrinsics,
    pub patches: Vec<Patch>,
    pub trajectory: TrajectorySpec,
}

impl SyntheticScene {
    pub fn new(intrinsics: Intrinsics, trajectory: TrajectorySpec) -> Self {
        Self {
            intrinsics,
            patches: Vec::new(),
            trajectory,
        }
    }

    pub fn add_patch(&mut self, patch: Patch) -> &mut Self {
        self.patches.push(patch);
        self
    }

    /// Adds the six outward-facing faces of an axis-aligned box.
    pub fn add_box(&mut self, center: Vector3<f64>, size: Vector3<f64>, texture: Texture, segment: u32) -> &mut Self {
        self.patches.extend(box_faces(center, size, texture, segment));
        self
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut intrinsics = Intrinsics::vga();
        let mut patches = Vec::new();
        let mut trajectory = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ctx = |e: Error| Error::parse(format!("scene line {}: {e}", lineno + 1));
            let mut tokens = line.split_whitespace();
            let kind = tokens.next().expect("non-empty line");
            let rest: Vec<&str> = tokens.collect();
            match kind {
                "intrinsics" => {
                    let v: Vec<f64> = rest
                        .iter()
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| ctx(Error::parse(e.to_string())))?;
                    if v.len() != 6 {
                        return Err(ctx(Error::parse("intrinsics needs fx fy cx cy width height")));
                    }
                    intrinsics = Intrinsics {
                        fx: v[0],
                        fy: v[1],
                        cx: v[2],
                        cy: v[3],
                        width: v[4] as usize,
                        height: v[5] as usize,
                    };
                }
                "plane" => {
                    let kv = KeyValues::parse(&rest).map_err(ctx)?;
                    let extent = kv.vec2("extent").map_err(ctx)?;
                    let mut patch = Patch::new(
                        kv.vec3("origin").map_err(ctx)?,
                        kv.vec3("normal").map_err(ctx)?,
                        extent,
                        kv.texture().map_err(ctx)?,
                        kv.uint("segment").map_err(ctx)?,
                    );
                    if kv.has("u") {
                        patch = patch.with_u_axis(kv.vec3("u").map_err(ctx)?);
                    }
                    patches.push(patch);
                }
                "box" => {
                    let kv = KeyValues::parse(&rest).map_err(ctx)?;
                    patches.extend(box_faces(
                        kv.vec3("center").map_err(ctx)?,
                        kv.vec3("size").map_err(ctx)?,
                        kv.texture().map_err(ctx)?,
                        kv.uint("segment").map_err(ctx)?,
                    ));
                }
                "orbit" => {
                    let kv = KeyValues::parse(&rest).map_err(ctx)?;
                    let center = kv.vec3("center").map_err(ctx)?;
                    trajectory = Some(TrajectorySpec::Orbit {
                        center,
                        radius: kv.float("radius").map_err(ctx)?,
                        height: kv.float("height").map_err(ctx)?,
                        start_deg: kv.float_or("start", 0.0).map_err(ctx)?,
                        step_deg: kv.float("step").map_err(ctx)?,
                        target: if kv.has("target") { kv.vec3("target").map_err(ctx)? } else { center },
                    });
                }
                "static" => {
                    let kv = KeyValues::parse(&rest).map_err(ctx)?;
                    trajectory = Some(TrajectorySpec::Static {
                        eye: kv.vec3("eye").map_err(ctx)?,
                        target: kv.vec3("target").map_err(ctx)?,
                    });
                }
                "linear" => {
                    let kv = KeyValues::parse(&rest).map_err(ctx)?;
                    trajectory = Some(TrajectorySpec::Linear {
                        eye: kv.vec3("eye").map_err(ctx)?,
                        target: kv.vec3("target").map_err(ctx)?,
                        velocity: kv.vec3("velocity").map_err(ctx)?,
                        yaw_rate_deg: kv.float_or("yaw_rate", 0.0).map_err(ctx)?,
                    });
                }
                other => return Err(ctx(Error::parse(format!("unknown directive `{other}`")))),
            }
        }
        let trajectory = trajectory.ok_or_else(|| Error::parse("scene has no trajectory"))?;
        if patches.is_empty() {
            return Err(Error::parse("scene has no surfaces"));
        }
        Ok(Self {
            intrinsics,
            patches,
            trajectory,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.patches.iter().map(|p| p.segment as usize + 1).max().unwrap_or(0)
    }
}

fn box_faces(center: Vector3<f64>, size: Vector3<f64>, texture: Texture, segment: u32) -> Vec<Patch> {
    let h = size * 0.5;
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut out = Vec::with_capacity(6);
    for (a, axis) in axes.iter().enumerate() {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            let normal = axis * sign;
            let origin = center + normal * h[a];
            let extent = (size[b], size[c]);
            let face = Patch::new(origin, normal, extent, texture, segment + (2 * a + s) as u32)
                .with_u_axis(axes[b]);
            out.push(face);
        }
    }
    out
}

struct KeyValues<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> KeyValues<'a> {
    fn parse(tokens: &[&'a str]) -> Result<Self, Error> {
        let pairs = tokens
            .iter()
            .map(|t| {
                t.split_once('=')
                    .ok_or_else(|| Error::parse(format!("expected key=value, found `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { pairs })
    }

    fn has(&self, key: &str) -> bool {
        self.pairs.iter().any(|(k, _)| *k == key)
    }

    fn get(&self, key: &str) -> Result<&'a str, Error> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::parse(format!("missing `{key}`")))
    }

    fn floats(&self, key: &str, n: usize) -> Result<Vec<f64>, Error> {
        let v: Vec<f64> = self
            .get(key)?
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::parse(format!("`{key}`: {e}")))?;
        if v.len() != n {
            return Err(Error::parse(format!("`{key}` needs {n} components")));
        }
        Ok(v)
    }

    fn vec3(&self, key: &str) -> Result<Vector3<f64>, Error> {
        let v = self.floats(key, 3)?;
        Ok(Vector3::new(v[0], v[1], v[2]))
    }

    fn vec2(&self, key: &str) -> Result<(f64, f64), Error> {
        let v = self.floats(key, 2)?;
        Ok((v[0], v[1]))
    }

    fn float(&self, key: &str) -> Result<f64, Error> {
        Ok(self.floats(key, 1)?[0])
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64, Error> {
        if self.has(key) {
            self.float(key)
        } else {
            Ok(default)
        }
    }

    fn uint(&self, key: &str) -> Result<u32, Error> {
        self.get(key)?
            .parse::<u32>()
            .map_err(|e| Error::parse(format!("`{key}`: {e}")))
    }

    fn texture(&self) -> Result<Texture, Error> {
        self.get("texture")?.parse()
    }
}
