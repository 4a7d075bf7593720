use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::frontend::{AssociationConfig, DepthNoiseModel, Intrinsics};
use crate::gibbs::GibbsConfig;
use crate::map::GraphConfig;
use crate::segmentation::SegmentationConfig;
use crate::tracking::TrackingConfig;
use crate::{Error, Result};

/// Where frames come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    /// A TUM RGB-D directory.
    Tum {
        path: PathBuf,
        #[serde(default = "Intrinsics::vga")]
        intrinsics: Intrinsics,
    },
    /// A synthetic scene file rendered on the fly.
    Synthetic {
        scene: PathBuf,
        #[serde(default = "default_frames")]
        frames: usize,
        /// Add axial depth noise from the `[noise]` model.
        #[serde(default)]
        noise: bool,
        #[serde(default)]
        noise_seed: u64,
    },
}

fn default_frames() -> usize {
    100
}

impl Default for InputSource {
    fn default() -> Self {
        InputSource::Synthetic {
            scene: PathBuf::from("scene.txt"),
            frames: default_frames(),
            noise: false,
            noise_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreadMode {
    /// Tracker, mapper and frame prefetch run concurrently.
    #[default]
    Parallel,
    /// One thread, a fixed number of sweeps between frames, one seeded RNG.
    Single,
}

/// New-surfel extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// New surfels per frame.
    pub budget: usize,
    /// Gradient floor as a fraction of the frame's maximum gradient.
    pub epsilon_ratio: f64,
    /// Minimum distance between seeds of one frame (pixels).
    pub min_spacing_px: f64,
    /// Border excluded from extraction (pixels).
    pub margin: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            budget: 300,
            epsilon_ratio: 0.05,
            min_spacing_px: 3.0,
            margin: 4,
        }
    }
}

/// Frame loop and mapper scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Sampler sweeps between frames in single-thread mode.
    pub sweeps_per_frame: usize,
    /// Sweeps run after the last frame before export.
    pub final_sweeps: usize,
    /// Consecutive lost frames tolerated before the run aborts.
    pub max_lost_frames: usize,
    /// Consecutive free-space violations that delete a surfel.
    pub deletion_violations: u32,
    /// Existing surfels whose neighbourhoods are recomputed per frame.
    pub graph_revisits: usize,
    /// Pose covariance assumed for the first frame.
    pub initial_pose_variance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sweeps_per_frame: 1,
            final_sweeps: 0,
            max_lost_frames: 10,
            deletion_violations: 3,
            graph_revisits: 200,
            initial_pose_variance: 1e-6,
        }
    }
}

/// Everything a run needs. Serialised as TOML with one table per stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: ThreadMode,
    pub output: PathBuf,
    pub input: InputSource,
    pub pipeline: PipelineConfig,
    pub noise: DepthNoiseModel,
    pub association: AssociationConfig,
    pub extraction: ExtractionConfig,
    pub graph: GraphConfig,
    pub segmentation: SegmentationConfig,
    pub gibbs: GibbsConfig,
    pub tracking: TrackingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: ThreadMode::default(),
            output: PathBuf::from("out"),
            input: InputSource::default(),
            pipeline: PipelineConfig::default(),
            noise: DepthNoiseModel::default(),
            association: AssociationConfig::default(),
            extraction: ExtractionConfig::default(),
            graph: GraphConfig::default(),
            segmentation: SegmentationConfig::default(),
            gibbs: GibbsConfig::default(),
            tracking: TrackingConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("every config value is representable in TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// Makes relative input paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.input {
            InputSource::Tum { path, .. } => fix(path),
            InputSource::Synthetic { scene, .. } => fix(scene),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::GibbsConfig;
    use crate::tracking::Selection;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_component_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.gibbs.tau_o, 100.0);
        assert_eq!(c.graph.k, 12);
        assert_eq!(c.graph.radius, 0.2);
        assert_eq!(c.gibbs.burn_in, 5);
        assert_eq!(c.gibbs.min_samples, 10);
        assert_eq!(c.extraction.budget, 300);
        assert_eq!(c.pipeline.sweeps_per_frame, 1);
        assert_eq!(c.pipeline.max_lost_frames, 10);
        assert_eq!(c.tracking, TrackingConfig::default());
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_file_overrides_only_given_keys() {
        let c = RunConfig::from_toml(
            "seed = 7\nthreads = \"single\"\n[input]\nkind = \"tum\"\npath = \"seq\"\n\
             [input.intrinsics]\nfx = 517.3\nfy = 516.5\ncx = 318.6\ncy = 255.3\nwidth = 640\nheight = 480\n\
             [tracking]\nselection = \"random\"\n[gibbs]\ntau_o = 50.0\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.threads, ThreadMode::Single);
        assert_eq!(c.tracking.selection, Selection::Random);
        assert_eq!(c.tracking.budget, TrackingConfig::default().budget);
        assert_eq!(c.gibbs.tau_o, 50.0);
        assert_eq!(c.gibbs.burn_in, GibbsConfig::default().burn_in);
        assert!(matches!(c.input, InputSource::Tum { ref intrinsics, .. } if intrinsics.fx == 517.3));
    }

    #[test]
    fn unknown_values_are_rejected() {
        assert!(RunConfig::from_toml("threads = \"many\"").is_err());
        assert!(RunConfig::from_toml("[input]\nkind = \"camera\"").is_err());
    }

    #[test]
    fn relative_inputs_resolve_against_the_config_directory() {
        let mut c = RunConfig::default();
        c.resolve_paths(Path::new("/data/runs"));
        assert!(matches!(c.input, InputSource::Synthetic { ref scene, .. } if scene == Path::new("/data/runs/scene.txt")));
    }

    proptest! {
        #[test]
        fn toml_round_trip_is_lossless(
            seed in any::<u64>(), tau in 1e-3f64..1e4, sigma in 1e-5f64..1.0, lambda in 0.0f64..10.0,
            h_max in -50.0f64..10.0, k in 1usize..40, sweeps in 0usize..10, single in any::<bool>(),
            noise in any::<bool>(), random in any::<bool>()
        ) {
            let mut c = RunConfig {
                seed,
                threads: if single { ThreadMode::Single } else { ThreadMode::Parallel },
                ..RunConfig::default()
            };
            c.gibbs.tau_o = tau;
            c.gibbs.sigma_pl = sigma;
            c.segmentation.lambda = lambda;
            c.tracking.h_max = h_max;
            c.tracking.selection = if random { Selection::Random } else { Selection::DirectionAware };
            c.graph.k = k;
            c.pipeline.sweeps_per_frame = sweeps;
            c.input = InputSource::Synthetic { scene: "a/b.txt".into(), frames: k * 3, noise, noise_seed: seed };
            let back = RunConfig::from_toml(&c.to_toml()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
