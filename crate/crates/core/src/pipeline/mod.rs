//! Frame loop: tracking, map fusion, surfel extraction and sampling.

mod config;
mod mapper;
mod run;
mod source;

pub use config::{ExtractionConfig, InputSource, PipelineConfig, RunConfig, ThreadMode};
pub use mapper::{FrameUpdate, Mapper, UpdateSummary};
pub use run::{
    format_segments, parse_segments, run_frames, run_parallel, run_single, run_slam, write_outputs, FrameLog,
    OutputPaths, RunOutputs, RunSummary,
};
pub use source::{load_scene, FrameSource, SourceFrame, SYNTHETIC_FPS};
