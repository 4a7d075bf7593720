use dirslam::eval::evaluate_ate;
use dirslam::frontend::{read_trajectory, SyntheticScene};
use dirslam::map::read_ply;
use dirslam::pipeline::{
    parse_segments, run_frames, run_slam, FrameSource, InputSource, RunConfig, ThreadMode,
};

const CORNER: &str = "intrinsics 525 525 319.5 239.5 640 480\n\
    plane origin=2,2,0 normal=0,0,1 extent=4,4 texture=sine:0.2 segment=0\n\
    plane origin=0,2,1.5 normal=1,0,0 extent=4,3 texture=sine:0.2 segment=1\n\
    plane origin=2,0,1.5 normal=0,1,0 extent=4,3 texture=sine:0.2 segment=2\n";

fn source(trajectory: &str, frames: usize) -> FrameSource {
    FrameSource::Synthetic {
        scene: SyntheticScene::parse(&format!("{CORNER}{trajectory}\n")).unwrap(),
        frames,
        noise: None,
    }
}

fn config(threads: ThreadMode) -> RunConfig {
    RunConfig {
        threads,
        ..RunConfig::default()
    }
}

#[test]
fn static_camera_stays_put() {
    let src = source("static eye=2.6,2.2,1.5 target=0.3,0.4,0.5", 100);
    let out = run_frames(&config(ThreadMode::Single), &src).unwrap();
    assert!(out.aborted.is_none());
    assert_eq!(out.trajectory.len(), 100);
    let report = evaluate_ate(&out.trajectory, &out.ground_truth).unwrap();
    assert!(report.rmse < 1e-3, "ATE {} m", report.rmse);
}

#[test]
fn single_thread_runs_are_bit_identical() {
    let src = source("orbit center=1,1,0.6 radius=2.2 height=1.6 start=40 step=0.5 target=0.3,0.4,0.5", 12);
    let cfg = config(ThreadMode::Single);
    let a = run_frames(&cfg, &src).unwrap();
    let b = run_frames(&cfg, &src).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.snapshot, b.snapshot);
    assert_eq!(a.sweeps.len(), b.sweeps.len());
}

#[test]
fn parallel_run_tracks_an_orbit() {
    let src = source("orbit center=1,1,0.6 radius=2.2 height=1.6 start=40 step=0.5 target=0.3,0.4,0.5", 30);
    let out = run_frames(&config(ThreadMode::Parallel), &src).unwrap();
    assert!(out.aborted.is_none());
    assert_eq!(out.trajectory.len(), 30);
    let report = evaluate_ate(&out.trajectory, &out.ground_truth).unwrap();
    assert!(report.rmse < 5e-3, "ATE {} m", report.rmse);
    assert!(!out.snapshot.surfels.is_empty());
}

#[test]
fn zero_frames_produce_empty_outputs() {
    let out = run_frames(&config(ThreadMode::Parallel), &source("static eye=1,1,1 target=0,0,0", 0)).unwrap();
    assert!(out.trajectory.is_empty());
    assert!(out.snapshot.surfels.is_empty());
    assert!(out.aborted.is_none());
}

#[test]
fn outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.txt");
    std::fs::write(&scene, format!("{CORNER}orbit center=1,1,0.6 radius=2.2 height=1.6 start=40 step=0.5 target=0.3,0.4,0.5\n")).unwrap();
    let cfg = RunConfig {
        threads: ThreadMode::Single,
        output: dir.path().join("out"),
        input: InputSource::Synthetic {
            scene: scene.clone(),
            frames: 6,
            noise: false,
            noise_seed: 0,
        },
        ..RunConfig::default()
    };
    let summary = run_slam(&cfg).unwrap();
    assert_eq!(summary.frames, 6);
    let paths = summary.paths;
    assert_eq!(read_trajectory(&paths.trajectory).unwrap().len(), 6);
    assert_eq!(read_trajectory(&paths.ground_truth).unwrap().len(), 6);
    let points = read_ply(&paths.map).unwrap();
    assert_eq!(points.len(), summary.surfels);
    let segments = parse_segments(&std::fs::read_to_string(&paths.segments).unwrap()).unwrap();
    assert_eq!(segments.len(), points.len());
    assert!(segments.iter().all(|&(_, s)| s < 3));
    let reloaded = RunConfig::load(&paths.config).unwrap();
    assert_eq!(reloaded.seed, cfg.seed);
    let tracking = std::fs::read_to_string(&paths.tracking).unwrap();
    assert_eq!(tracking.lines().count(), 6);
}
