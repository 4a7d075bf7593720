//! TUM RGB-D directory layout: `rgb.txt`, `depth.txt`, optional
//! `groundtruth.txt`, 16-bit depth PNGs scaled by 5000.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{Frame, Image, Intrinsics};
use crate::fsutil::write_atomic;
use crate::math::Se3;
use crate::{Error, Result};

/// Raw depth units per metre.
pub const DEPTH_SCALE: f64 = 5000.0;

/// Maximum timestamp difference for association (s).
pub const MAX_TIME_DIFFERENCE: f64 = 0.02;

/// Converts a raw 16-bit depth value to metres.
pub fn depth_from_raw(raw: u16) -> f32 {
    (raw as f64 / DEPTH_SCALE) as f32
}

/// Converts metres to the raw 16-bit encoding (0 for invalid).
pub fn depth_to_raw(z: f32) -> u16 {
    if z <= 0.0 {
        0
    } else {
        (z as f64 * DEPTH_SCALE).round().clamp(0.0, u16::MAX as f64) as u16
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// `timestamp filename` lines, skipping comments.
fn parse_file_list(path: &Path) -> Result<Vec<(f64, String)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(t), Some(f)) = (it.next(), it.next()) else {
            return Err(Error::parse(format!("{}:{}: expected `timestamp file`", path.display(), i + 1)));
        };
        let t = t
            .parse::<f64>()
            .map_err(|e| Error::parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push((t, f.to_string()));
    }
    Ok(out)
}

/// Parses a TUM trajectory (`t tx ty tz qx qy qz qw`).
pub fn parse_trajectory(text: &str) -> Result<Vec<(f64, Se3)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| Error::parse(format!("trajectory line {}: {e}", i + 1)))?;
        if v.len() != 8 {
            return Err(Error::parse(format!("trajectory line {}: expected 8 values", i + 1)));
        }
        let q = UnitQuaternion::from_quaternion(Quaternion::new(v[7], v[4], v[5], v[6]));
        out.push((v[0], Se3::new(q, Vector3::new(v[1], v[2], v[3]))));
    }
    Ok(out)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<(f64, Se3)>> {
    parse_trajectory(&read_text(path.as_ref())?)
}

pub fn format_trajectory(poses: &[(f64, Se3)]) -> String {
    let mut s = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for (t, p) in poses {
        let q = p.rotation.quaternion();
        s.push_str(&format!(
            "{:.6} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}\n",
            t, p.translation.x, p.translation.y, p.translation.z, q.i, q.j, q.k, q.w
        ));
    }
    s
}

pub fn write_trajectory(path: impl AsRef<Path>, poses: &[(f64, Se3)]) -> Result<()> {
    write_atomic(path, format_trajectory(poses).as_bytes())
}

/// Index of the entry nearest to `t` in a sorted list, if within `max_dt`.
pub fn nearest_timestamp(sorted: &[f64], t: f64, max_dt: f64) -> Option<usize> {
    let i = sorted.partition_point(|&x| x < t);
    let mut best: Option<usize> = None;
    for j in [i.wrapping_sub(1), i] {
        if j < sorted.len() && (sorted[j] - t).abs() <= max_dt {
            if best.is_none_or(|b| (sorted[j] - t).abs() < (sorted[b] - t).abs()) {
                best = Some(j);
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct TumEntry {
    pub timestamp: f64,
    pub rgb: PathBuf,
    pub depth: PathBuf,
    pub ground_truth: Option<Se3>,
}

/// An associated TUM sequence whose images are decoded on demand.
#[derive(Clone, Debug)]
pub struct TumSequence {
    pub intrinsics: Intrinsics,
    pub entries: Vec<TumEntry>,
    /// Number of rgb frames dropped for lack of a depth match.
    pub skipped: usize,
}

/// Reads and associates a TUM directory.
pub fn parse_tum_sequence(dir: impl AsRef<Path>, intrinsics: Intrinsics) -> Result<TumSequence> {
    let dir = dir.as_ref();
    let rgb = parse_file_list(&dir.join("rgb.txt"))?;
    let mut depth = parse_file_list(&dir.join("depth.txt"))?;
    depth.sort_by(|a, b| a.0.total_cmp(&b.0));
    let depth_times: Vec<f64> = depth.iter().map(|d| d.0).collect();
    let gt_path = dir.join("groundtruth.txt");
    let mut gt = if gt_path.exists() {
        read_trajectory(&gt_path)?
    } else {
        Vec::new()
    };
    gt.sort_by(|a, b| a.0.total_cmp(&b.0));
    let gt_times: Vec<f64> = gt.iter().map(|g| g.0).collect();

    let mut entries = Vec::with_capacity(rgb.len());
    let mut skipped = 0;
    for (t, file) in rgb {
        let Some(j) = nearest_timestamp(&depth_times, t, MAX_TIME_DIFFERENCE) else {
            log::warn!("rgb frame at {t:.6} has no depth within {MAX_TIME_DIFFERENCE} s; skipped");
            skipped += 1;
            continue;
        };
        let ground_truth = nearest_timestamp(&gt_times, t, MAX_TIME_DIFFERENCE).map(|k| gt[k].1);
        entries.push(TumEntry {
            timestamp: t,
            rgb: dir.join(file),
            depth: dir.join(&depth[j].1),
            ground_truth,
        });
    }
    Ok(TumSequence {
        intrinsics,
        entries,
        skipped,
    })
}

impl TumSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load_frame(&self, index: usize) -> Result<Frame> {
        let e = &self.entries[index];
        let open = |p: &Path| image::open(p).map_err(|source| Error::Image { path: p.to_path_buf(), source });
        let rgb = open(&e.rgb)?.to_rgb8();
        let depth = open(&e.depth)?.to_luma16();
        let k = self.intrinsics;
        if rgb.dimensions() != (k.width as u32, k.height as u32) || depth.dimensions() != rgb.dimensions() {
            return Err(Error::invalid(format!(
                "frame {index}: image size does not match intrinsics {}×{}",
                k.width, k.height
            )));
        }
        let (w, h) = (k.width, k.height);
        let rgb_img = Image::from_fn(w, h, |u, v| rgb.get_pixel(u as u32, v as u32).0);
        let intensity = Image::from_fn(w, h, |u, v| {
            let [r, g, b] = rgb_img.get(u, v);
            ((0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32) / 255.0).clamp(0.0, 1.0)
        });
        let depth = Image::from_fn(w, h, |u, v| depth_from_raw(depth.get_pixel(u as u32, v as u32).0[0]));
        Ok(Frame::new(e.timestamp, k, intensity, depth, Some(rgb_img)))
    }

    pub fn ground_truth(&self) -> Vec<(f64, Se3)> {
        self.entries
            .iter()
            .filter_map(|e| e.ground_truth.map(|g| (e.timestamp, g)))
            .collect()
    }
}

/// Writes frames in TUM layout (`rgb/`, `depth/`, list files and, when
/// poses are given, `groundtruth.txt`).
pub fn write_tum_sequence(dir: impl AsRef<Path>, frames: &[(Frame, Option<Se3>)]) -> Result<()> {
    let dir = dir.as_ref();
    for sub in ["rgb", "depth"] {
        fs::create_dir_all(dir.join(sub)).map_err(|e| Error::io(dir.join(sub), e))?;
    }
    let mut rgb_list = String::from("# timestamp filename\n");
    let mut depth_list = String::from("# timestamp filename\n");
    let mut gt = Vec::new();
    for (frame, pose) in frames {
        let name = format!("{:.6}.png", frame.timestamp);
        write_frame_images(dir, &name, frame)?;
        rgb_list.push_str(&format!("{:.6} rgb/{name}\n", frame.timestamp));
        depth_list.push_str(&format!("{:.6} depth/{name}\n", frame.timestamp));
        if let Some(p) = pose {
            gt.push((frame.timestamp, *p));
        }
    }
    write_atomic(dir.join("rgb.txt"), rgb_list.as_bytes())?;
    write_atomic(dir.join("depth.txt"), depth_list.as_bytes())?;
    if !gt.is_empty() {
        write_trajectory(dir.join("groundtruth.txt"), &gt)?;
    }
    Ok(())
}

fn write_frame_images(dir: &Path, name: &str, frame: &Frame) -> Result<()> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let rgb: RgbImage = match &frame.rgb {
        Some(img) => ImageBuffer::from_fn(w, h, |u, v| Rgb(img.get(u as usize, v as usize))),
        None => {
            let gray: GrayImage = ImageBuffer::from_fn(w, h, |u, v| {
                Luma([(frame.intensity.get(u as usize, v as usize).clamp(0.0, 1.0) * 255.0).round() as u8])
            });
            image::DynamicImage::ImageLuma8(gray).to_rgb8()
        }
    };
    let depth: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(w, h, |u, v| Luma([depth_to_raw(frame.depth.get(u as usize, v as usize))]));
    let save = |path: PathBuf, result: image::ImageResult<()>| result.map_err(|source| Error::Image { path, source });
    let rgb_path = dir.join("rgb").join(name);
    save(rgb_path.clone(), rgb.save(&rgb_path))?;
    let depth_path = dir.join("depth").join(name);
    save(depth_path.clone(), depth.save(&depth_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn depth_scale() {
        assert_eq!(depth_from_raw(5000), 1.0);
        assert_eq!(depth_to_raw(1.0), 5000);
        assert_eq!(depth_to_raw(0.0), 0);
    }

    #[test]
    fn identity_quaternion() {
        let gt = parse_trajectory("1.0 0.1 0.2 0.3 0 0 0 1\n").unwrap();
        assert_eq!(gt.len(), 1);
        assert_relative_eq!(gt[0].1.rotation_matrix(), nalgebra::Matrix3::identity());
        assert_relative_eq!(gt[0].1.translation, Vector3::new(0.1, 0.2, 0.3));
    }

    #[test]
    fn trajectory_round_trip() {
        let poses: Vec<_> = (0..5)
            .map(|i| {
                let w = nalgebra::Vector6::new(0.1 * i as f64, -0.2, 0.3, 1.0, 2.0 * i as f64, -0.5);
                (i as f64 * 0.033, Se3::exp(&w))
            })
            .collect();
        let back = parse_trajectory(&format_trajectory(&poses)).unwrap();
        for ((t0, p0), (t1, p1)) in poses.iter().zip(&back) {
            assert_relative_eq!(t0, t1, epsilon = 1e-6);
            assert_relative_eq!(p0.translation, p1.translation, epsilon = 1e-8);
            assert_relative_eq!(p0.rotation_matrix(), p1.rotation_matrix(), epsilon = 1e-8);
        }
    }

    #[test]
    fn offset_lists_associate_fully() {
        let dir = tempfile::tempdir().unwrap();
        let rgb: String = (0..30).map(|i| format!("{:.6} rgb/{i}.png\n", i as f64 / 30.0)).collect();
        let depth: String = (0..30)
            .map(|i| format!("{:.6} depth/{i}.png\n", i as f64 / 30.0 + 0.01))
            .collect();
        fs::write(dir.path().join("rgb.txt"), rgb).unwrap();
        fs::write(dir.path().join("depth.txt"), depth).unwrap();
        let seq = parse_tum_sequence(dir.path(), Intrinsics::vga()).unwrap();
        assert_eq!(seq.len(), 30);
        assert_eq!(seq.skipped, 0);
        for (i, e) in seq.entries.iter().enumerate() {
            assert!(e.depth.ends_with(format!("depth/{i}.png")));
        }
    }

    #[test]
    fn missing_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let err = parse_tum_sequence(dir.path(), Intrinsics::vga()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn sequence_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let k = Intrinsics {
            width: 8,
            height: 6,
            ..Intrinsics::vga()
        };
        let frames: Vec<(Frame, Option<Se3>)> = (0..3)
            .map(|i| {
                let depth = Image::from_fn(8, 6, |u, v| depth_from_raw((4000 + 37 * u + 101 * v + 7 * i) as u16));
                let rgb = Image::from_fn(8, 6, |u, v| [(u * 30) as u8, (v * 40) as u8, 9]);
                let intensity = Image::from_fn(8, 6, |u, v| {
                    let [r, g, b] = rgb.get(u, v);
                    (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32) / 255.0
                });
                let f = Frame::new(0.5 + i as f64 * 0.1, k, intensity, depth, Some(rgb));
                (f, Some(Se3::from_translation(Vector3::new(i as f64, 0.0, 0.0))))
            })
            .collect();
        write_tum_sequence(dir.path(), &frames).unwrap();
        let seq = parse_tum_sequence(dir.path(), k).unwrap();
        assert_eq!(seq.len(), 3);
        for (i, (orig, pose)) in frames.iter().enumerate() {
            let f = seq.load_frame(i).unwrap();
            assert_eq!(f.timestamp, orig.timestamp);
            assert_eq!(f.depth.data, orig.depth.data);
            assert_eq!(f.rgb, orig.rgb);
            assert_relative_eq!(seq.entries[i].ground_truth.unwrap().translation, pose.unwrap().translation);
        }
    }
}
