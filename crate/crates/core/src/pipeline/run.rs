use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mapper::{FrameUpdate, Mapper};
use super::source::{FrameSource, SourceFrame};
use super::{RunConfig, ThreadMode};
use crate::frontend::{associate, extract_new_surfels, write_trajectory, PruneReason};
use crate::fsutil::write_atomic;
use crate::gibbs::SweepReport;
use crate::map::{write_map_stats, write_ply, MapPoint, MapSnapshot, SurfelSeed};
use crate::math::{Pose, Se3};
use crate::tracking::{incremental_icp, TrackDiagnostics};
use crate::{Error, Result};

/// One line of `tracking.jsonl`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameLog {
    pub frame: usize,
    pub timestamp: f64,
    /// Live surfels in the snapshot the frame was tracked against.
    pub snapshot_surfels: usize,
    pub associated: usize,
    pub free_space: usize,
    pub new_surfels: usize,
    /// Absent for the first frame, which fixes the map origin.
    pub tracking: Option<TrackDiagnostics>,
}

/// In-memory result of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOutputs {
    pub trajectory: Vec<(f64, Se3)>,
    pub ground_truth: Vec<(f64, Se3)>,
    pub snapshot: MapSnapshot,
    /// True segment of each snapshot surfel, in snapshot order, when known.
    pub true_segments: Vec<Option<u32>>,
    pub frames: Vec<FrameLog>,
    pub sweeps: Vec<SweepReport>,
    /// Why the run stopped early.
    pub aborted: Option<String>,
}

/// Tracks `source` with the pose chain seeded at `init`, associates and
/// extracts against `snapshot`, and returns the pose with the map update.
fn observe_frame<R: Rng + ?Sized>(
    input: &SourceFrame,
    snapshot: &MapSnapshot,
    pose: &Pose,
    config: &RunConfig,
    rng: &mut R,
) -> (FrameUpdate, usize) {
    let frame = &input.frame;
    let assoc = associate(snapshot, frame, pose, &config.noise, &config.association);
    let associations = assoc
        .batch
        .iter()
        .map(|a| (a.surfel, a.observation.to_world(pose)))
        .collect();
    let free_space: Vec<_> = assoc
        .pruned
        .iter()
        .filter(|(_, r)| *r == PruneReason::FreeSpace)
        .map(|(id, _)| *id)
        .collect();
    let ex = &config.extraction;
    let seeds = extract_new_surfels(
        frame,
        &assoc.coverage,
        ex.budget,
        ex.epsilon_ratio,
        ex.min_spacing_px,
        ex.margin,
        rng,
    )
    .into_iter()
    .filter_map(|px| {
        SurfelSeed::from_pixel(frame, px, pose, &config.noise, config.association.half_window)
            .map(|s| (s, input.segment_at(px)))
    })
    .collect();
    let associated = assoc.batch.len();
    (
        FrameUpdate {
            associations,
            free_space,
            seeds,
        },
        associated,
    )
}

/// Pose-chain bookkeeping shared by both thread modes.
struct Tracker {
    trajectory: Vec<(f64, Se3)>,
    consecutive_lost: usize,
}

enum Step {
    /// The frame was tracked (or fixed the origin); fuse it.
    Fuse(Pose, Option<TrackDiagnostics>),
    /// Tracking failed; keep the predicted pose and skip fusion.
    Lost(TrackDiagnostics),
}

impl Tracker {
    fn new() -> Self {
        Self {
            trajectory: Vec::new(),
            consecutive_lost: 0,
        }
    }

    /// Constant-velocity prediction from the last two poses.
    fn predict(&self) -> Option<Se3> {
        let n = self.trajectory.len();
        match n {
            0 => None,
            1 => Some(self.trajectory[0].1),
            _ => {
                let (a, b) = (&self.trajectory[n - 2].1, &self.trajectory[n - 1].1);
                Some(b.compose(&a.inverse().compose(b)))
            }
        }
    }

    fn step<R: Rng + ?Sized>(
        &mut self,
        input: &SourceFrame,
        snapshot: &MapSnapshot,
        config: &RunConfig,
        rng: &mut R,
    ) -> Step {
        let timestamp = input.frame.timestamp;
        let Some(init) = self.predict() else {
            let origin = input.ground_truth.unwrap_or_else(Se3::identity);
            self.trajectory.push((timestamp, origin));
            return Step::Fuse(
                Pose::with_isotropic_covariance(origin, config.pipeline.initial_pose_variance),
                None,
            );
        };
        let result = incremental_icp(
            &input.frame,
            snapshot,
            &init,
            &config.noise,
            &config.association,
            &config.tracking,
            rng,
        );
        self.trajectory.push((timestamp, result.pose.transform));
        if result.diagnostics.lost {
            self.consecutive_lost += 1;
            Step::Lost(result.diagnostics)
        } else {
            self.consecutive_lost = 0;
            Step::Fuse(result.pose, Some(result.diagnostics))
        }
    }

    fn abort_reason(&self, config: &RunConfig) -> Option<String> {
        (self.consecutive_lost > config.pipeline.max_lost_frames)
            .then(|| format!("tracking lost for {} consecutive frames", self.consecutive_lost))
    }
}

fn frame_log(index: usize, input: &SourceFrame, snapshot: &MapSnapshot, step: &Step) -> FrameLog {
    FrameLog {
        frame: index,
        timestamp: input.frame.timestamp,
        snapshot_surfels: snapshot.len(),
        tracking: match step {
            Step::Fuse(_, d) => d.clone(),
            Step::Lost(d) => Some(d.clone()),
        },
        ..FrameLog::default()
    }
}

fn record(log: &mut FrameLog, update: &FrameUpdate, associated: usize) {
    log.associated = associated;
    log.free_space = update.free_space.len();
    log.new_surfels = update.seeds.len();
}

fn finish(mapper: &mut Mapper, tracker: Tracker, source: &FrameSource, frames: Vec<FrameLog>, sweeps: Vec<SweepReport>, aborted: Option<String>) -> RunOutputs {
    let snapshot = mapper.publish();
    let true_segments = snapshot
        .surfels
        .iter()
        .map(|s| mapper.true_segments.get(&s.id).copied())
        .collect();
    RunOutputs {
        trajectory: tracker.trajectory,
        ground_truth: source.ground_truth(),
        snapshot,
        true_segments,
        frames,
        sweeps,
        aborted,
    }
}

/// Single-threaded run: every frame is tracked, fused, and followed by
/// `sweeps_per_frame` sweeps, all driven by one RNG seeded from the config.
pub fn run_single(config: &RunConfig, source: &FrameSource) -> Result<RunOutputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mapper = Mapper::new(config);
    let mut tracker = Tracker::new();
    let mut snapshot = MapSnapshot::default();
    let mut frames = Vec::new();
    let mut sweeps = Vec::new();
    let mut aborted = None;
    for index in 0..source.len() {
        let input = source.load(index)?;
        let step = tracker.step(&input, &snapshot, config, &mut rng);
        let mut log = frame_log(index, &input, &snapshot, &step);
        if let Step::Fuse(pose, _) = &step {
            let (update, associated) = observe_frame(&input, &snapshot, pose, config, &mut rng);
            record(&mut log, &update, associated);
            mapper.apply(update, &mut rng);
        }
        frames.push(log);
        if let Some(reason) = tracker.abort_reason(config) {
            aborted = Some(reason);
            break;
        }
        for _ in 0..config.pipeline.sweeps_per_frame {
            sweeps.push(mapper.sweep(&mut rng));
        }
        snapshot = mapper.publish();
    }
    for _ in 0..config.pipeline.final_sweeps {
        sweeps.push(mapper.sweep(&mut rng));
    }
    Ok(finish(&mut mapper, tracker, source, frames, sweeps, aborted))
}

enum MapperMessage {
    Update(FrameUpdate),
    Finish,
}

/// Latest published snapshot and the number of frame updates it reflects.
struct Shared {
    snapshot: Arc<MapSnapshot>,
    applied: usize,
}

/// Concurrent run: a prefetch thread loads frames, the calling thread
/// tracks, and a mapper thread applies updates and sweeps continuously.
/// The tracker waits until the previous frame's update is in a published
/// snapshot; sampling otherwise proceeds at its own pace.
pub fn run_parallel(config: &RunConfig, source: &FrameSource) -> Result<RunOutputs> {
    let shared = Arc::new((
        Mutex::new(Shared {
            snapshot: Arc::new(MapSnapshot::default()),
            applied: 0,
        }),
        Condvar::new(),
    ));
    let (frame_tx, frame_rx) = mpsc::sync_channel::<Result<SourceFrame>>(2);
    let (update_tx, update_rx) = mpsc::channel::<MapperMessage>();

    thread::scope(|scope| {
        let prefetch = scope.spawn(move || {
            for index in 0..source.len() {
                let frame = source.load(index);
                let failed = frame.is_err();
                if frame_tx.send(frame).is_err() || failed {
                    break;
                }
            }
        });

        let mapper_shared = Arc::clone(&shared);
        let mapper = scope.spawn(move || {
            let mut mapper = Mapper::new(config);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6d61_7070_6572);
            let mut sweeps = Vec::new();
            let mut finishing = false;
            loop {
                let mut applied = 0;
                let mut next = if mapper.map.is_empty() && !finishing {
                    update_rx.recv().ok()
                } else {
                    update_rx.try_recv().ok()
                };
                while let Some(message) = next {
                    match message {
                        MapperMessage::Update(update) => {
                            mapper.apply(update, &mut rng);
                            applied += 1;
                        }
                        MapperMessage::Finish => finishing = true,
                    }
                    next = update_rx.try_recv().ok();
                }
                if finishing {
                    break;
                }
                if !mapper.map.is_empty() {
                    sweeps.push(mapper.sweep_parallel());
                }
                let snapshot = Arc::new(mapper.publish());
                let (lock, cv) = &*mapper_shared;
                let mut s = lock.lock().expect("snapshot lock");
                s.snapshot = snapshot;
                s.applied += applied;
                cv.notify_all();
            }
            for _ in 0..config.pipeline.final_sweeps {
                sweeps.push(mapper.sweep_parallel());
            }
            (mapper, sweeps)
        });

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut tracker = Tracker::new();
        let mut frames = Vec::new();
        let mut aborted = None;
        let mut sent = 0usize;
        let mut failure = None;
        for (index, input) in frame_rx.iter().enumerate() {
            let input = match input {
                Ok(f) => f,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };
            let snapshot = {
                let (lock, cv) = &*shared;
                let guard = cv
                    .wait_while(lock.lock().expect("snapshot lock"), |s| s.applied < sent)
                    .expect("snapshot lock");
                Arc::clone(&guard.snapshot)
            };
            let step = tracker.step(&input, &snapshot, config, &mut rng);
            let mut log = frame_log(index, &input, &snapshot, &step);
            if let Step::Fuse(pose, _) = &step {
                let (update, associated) = observe_frame(&input, &snapshot, pose, config, &mut rng);
                record(&mut log, &update, associated);
                if update_tx.send(MapperMessage::Update(update)).is_ok() {
                    sent += 1;
                }
            }
            frames.push(log);
            if let Some(reason) = tracker.abort_reason(config) {
                aborted = Some(reason);
                break;
            }
        }
        drop(frame_rx);
        let _ = update_tx.send(MapperMessage::Finish);
        let (mut mapper, sweeps) = mapper.join().expect("mapper thread panicked");
        prefetch.join().expect("prefetch thread panicked");
        match failure {
            Some(e) => Err(e),
            None => Ok(finish(&mut mapper, tracker, source, frames, sweeps, aborted)),
        }
    })
}

/// Runs the configured pipeline in memory.
pub fn run_frames(config: &RunConfig, source: &FrameSource) -> Result<RunOutputs> {
    match config.threads {
        ThreadMode::Single => run_single(config, source),
        ThreadMode::Parallel => run_parallel(config, source),
    }
}

/// Paths of the files a run writes.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub trajectory: PathBuf,
    pub ground_truth: PathBuf,
    pub map: PathBuf,
    pub map_stats: PathBuf,
    pub segments: PathBuf,
    pub sweeps: PathBuf,
    pub tracking: PathBuf,
    pub config: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            trajectory: dir.join("trajectory.txt"),
            ground_truth: dir.join("groundtruth.txt"),
            map: dir.join("map.ply"),
            map_stats: dir.join("map_stats.csv"),
            segments: dir.join("segments_gt.txt"),
            sweeps: dir.join("sweeps.jsonl"),
            tracking: dir.join("tracking.jsonl"),
            config: dir.join("config.toml"),
        }
    }
}

fn json_lines<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("log records serialise") + "\n")
        .collect()
}

/// `segments_gt.txt`: one `vertex segment` line per map vertex whose true
/// segment is known.
pub fn format_segments(segments: &[Option<u32>]) -> String {
    let mut out = String::from("# vertex segment\n");
    for (i, s) in segments.iter().enumerate() {
        if let Some(s) = s {
            out.push_str(&format!("{i} {s}\n"));
        }
    }
    out
}

pub fn parse_segments(text: &str) -> Result<Vec<(usize, u32)>> {
    text.lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            let mut it = l.split_whitespace();
            let parse_err = || Error::parse(format!("segments line {}: expected `vertex segment`", n + 1));
            let v = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
            let s = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
            Ok((v, s))
        })
        .collect()
}

/// Writes every artifact of a run into `dir`, each file atomically.
pub fn write_outputs(dir: &Path, config: &RunConfig, outputs: &RunOutputs) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths::new(dir);
    write_trajectory(&paths.trajectory, &outputs.trajectory)?;
    if !outputs.ground_truth.is_empty() {
        write_trajectory(&paths.ground_truth, &outputs.ground_truth)?;
    }
    let points: Vec<MapPoint> = outputs.snapshot.surfels.iter().map(MapPoint::from_estimate).collect();
    write_ply(&paths.map, &points)?;
    write_map_stats(&paths.map_stats, &outputs.snapshot)?;
    if outputs.true_segments.iter().any(Option::is_some) {
        write_atomic(&paths.segments, format_segments(&outputs.true_segments).as_bytes())?;
    }
    write_atomic(&paths.sweeps, json_lines(&outputs.sweeps).as_bytes())?;
    write_atomic(&paths.tracking, json_lines(&outputs.frames).as_bytes())?;
    write_atomic(&paths.config, config.to_toml().as_bytes())?;
    Ok(paths)
}

/// Summary of a completed run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub frames: usize,
    pub surfels: usize,
    pub clusters: usize,
    pub sweeps: usize,
    pub paths: OutputPaths,
    pub aborted: Option<String>,
}

/// Loads the input, runs the pipeline and writes all outputs to
/// `config.output`. Outputs are written even when the run aborts.
pub fn run_slam(config: &RunConfig) -> Result<RunSummary> {
    let source = FrameSource::open(&config.input, &config.noise)?;
    let outputs = run_frames(config, &source)?;
    let paths = write_outputs(&config.output, config, &outputs)?;
    let clusters = outputs
        .snapshot
        .surfels
        .iter()
        .map(|s| s.label)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    Ok(RunSummary {
        frames: outputs.trajectory.len(),
        surfels: outputs.snapshot.len(),
        clusters,
        sweeps: outputs.sweeps.len(),
        paths,
        aborted: outputs.aborted,
    })
}
