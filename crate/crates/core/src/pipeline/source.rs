use std::path::Path;

use super::InputSource;
use crate::frontend::{
    parse_tum_sequence, render_synthetic, DepthNoiseModel, Frame, Image, RenderNoise, SyntheticScene, TumSequence,
    BACKGROUND,
};
use crate::math::Se3;
use crate::{Error, Result};

/// Synthetic frames are stamped at this rate.
pub const SYNTHETIC_FPS: f64 = 30.0;

/// One input frame with whatever ground truth the source provides.
#[derive(Clone, Debug)]
pub struct SourceFrame {
    pub frame: Frame,
    pub ground_truth: Option<Se3>,
    /// Per-pixel true segment id ([`BACKGROUND`] where nothing was hit).
    pub segments: Option<Image<i32>>,
}

impl SourceFrame {
    pub fn segment_at(&self, pixel: (usize, usize)) -> Option<u32> {
        let s = self.segments.as_ref()?.get(pixel.0, pixel.1);
        (s != BACKGROUND).then_some(s as u32)
    }
}

/// A random-access sequence of frames.
#[derive(Clone, Debug)]
pub enum FrameSource {
    Synthetic {
        scene: SyntheticScene,
        frames: usize,
        noise: Option<RenderNoise>,
    },
    Tum(TumSequence),
}

impl FrameSource {
    pub fn open(input: &InputSource, noise: &DepthNoiseModel) -> Result<Self> {
        match input {
            InputSource::Tum { path, intrinsics } => Ok(FrameSource::Tum(parse_tum_sequence(path, *intrinsics)?)),
            InputSource::Synthetic {
                scene,
                frames,
                noise: noisy,
                noise_seed,
            } => Ok(FrameSource::Synthetic {
                scene: load_scene(scene)?,
                frames: *frames,
                noise: noisy.then_some(RenderNoise {
                    model: *noise,
                    seed: *noise_seed,
                }),
            }),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FrameSource::Synthetic { frames, .. } => *frames,
            FrameSource::Tum(seq) => seq.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn load(&self, index: usize) -> Result<SourceFrame> {
        match self {
            FrameSource::Synthetic { scene, noise, .. } => {
                let pose = scene.trajectory.pose(index);
                // each frame draws fresh noise
                let noise = noise.map(|n| RenderNoise {
                    seed: n.seed.wrapping_add(index as u64),
                    ..n
                });
                let rendered =
                    render_synthetic(scene, &pose, &scene.intrinsics, noise, index as f64 / SYNTHETIC_FPS);
                Ok(SourceFrame {
                    frame: rendered.frame,
                    ground_truth: Some(pose),
                    segments: Some(rendered.segment),
                })
            }
            FrameSource::Tum(seq) => Ok(SourceFrame {
                frame: seq.load_frame(index)?,
                ground_truth: seq.entries[index].ground_truth,
                segments: None,
            }),
        }
    }

    /// Ground-truth poses of every frame, where known.
    pub fn ground_truth(&self) -> Vec<(f64, Se3)> {
        match self {
            FrameSource::Synthetic { scene, frames, .. } => (0..*frames)
                .map(|i| (i as f64 / SYNTHETIC_FPS, scene.trajectory.pose(i)))
                .collect(),
            FrameSource::Tum(seq) => seq.ground_truth(),
        }
    }
}

pub fn load_scene(path: &Path) -> Result<SyntheticScene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SyntheticScene::parse(&text).map_err(|e| Error::parse(format!("{}: {e}", path.display())))
}
