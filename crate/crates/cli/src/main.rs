use std::io;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dirslam::eval::{evaluate_ate, evaluate_segmentation};
use dirslam::frontend::{plane_sparsity_experiment, read_trajectory, write_tum_sequence, PlaneSampling, RenderNoise};
use dirslam::map::{read_ply, NO_LABEL};
use dirslam::math::UnitVec3;
use dirslam::pipeline::{load_scene, parse_segments, run_slam, FrameSource, RunConfig, ThreadMode};
use log::info;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser, Debug)]
#[command(name = "dirslam", version, about = "Direction-aware surfel SLAM and evaluation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the SLAM pipeline on a TUM sequence or a synthetic scene.
    Run {
        /// TOML run configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Deterministic single-threaded mode.
        #[arg(long)]
        single_thread: bool,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the effective configuration with every default and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Absolute trajectory error of an estimate against ground truth.
    EvalAte {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Also print per-frame translational errors.
        #[arg(long)]
        per_frame: bool,
    },
    /// Segmentation accuracy of a labelled map against true segments.
    EvalSeg {
        #[arg(long)]
        map: PathBuf,
        /// `vertex segment` lines, as written next to the map by `run`.
        #[arg(long)]
        gt: PathBuf,
    },
    /// Inlier-fraction curve of randomly drawn planes; CSV on stdout.
    PlaneSparsity {
        /// PLY cloud with normals.
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        max_planes: usize,
        /// Inlier distance in metres.
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw each plane from any point instead of an unexplained one.
        #[arg(long)]
        uniform: bool,
    },
    /// Render a synthetic scene to a TUM-layout sequence.
    Synth {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
        /// Add depth noise seeded with this value.
        #[arg(long)]
        noise_seed: Option<u64>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            single_thread,
            out,
            dump_config,
        } => run(config.as_deref(), seed, single_thread, out, dump_config),
        Command::EvalAte { est, gt, per_frame } => eval_ate(&est, &gt, per_frame),
        Command::EvalSeg { map, gt } => eval_seg(&map, &gt),
        Command::PlaneSparsity {
            cloud,
            max_planes,
            threshold,
            trials,
            seed,
            uniform,
        } => plane_sparsity(&cloud, max_planes, threshold, trials, seed, uniform),
        Command::Synth {
            scene,
            frames,
            out,
            noise_seed,
        } => synth(&scene, frames, &out, noise_seed),
    }
}

fn run(
    path: Option<&Path>,
    seed: Option<u64>,
    single_thread: bool,
    out: Option<PathBuf>,
    dump_config: bool,
) -> Result<()> {
    let mut config = match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if single_thread {
        config.threads = ThreadMode::Single;
    }
    if let Some(o) = out {
        config.output = o;
    }
    if dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    info!("running {:?} mode with seed {}", config.threads, config.seed);
    let summary = run_slam(&config)?;
    info!(
        "{} frames, {} surfels, {} clusters, {} sweeps; outputs in {}",
        summary.frames,
        summary.surfels,
        summary.clusters,
        summary.sweeps,
        config.output.display()
    );
    if let Some(reason) = summary.aborted {
        bail!("run aborted: {reason}; partial outputs written");
    }
    Ok(())
}

fn eval_ate(est: &Path, gt: &Path, per_frame: bool) -> Result<()> {
    let estimated = read_trajectory(est).with_context(|| format!("reading {}", est.display()))?;
    let truth = read_trajectory(gt).with_context(|| format!("reading {}", gt.display()))?;
    let report = evaluate_ate(&estimated, &truth)?;
    println!("matched {}", report.errors.len());
    println!("ate_rmse {:.6}", report.rmse);
    println!("ate_mean {:.6}", report.mean);
    println!("ate_median {:.6}", report.median);
    println!("ate_max {:.6}", report.max);
    if per_frame {
        for (t, e) in &report.errors {
            println!("{t:.6} {e:.6}");
        }
    }
    Ok(())
}

fn eval_seg(map: &Path, gt: &Path) -> Result<()> {
    let points = read_ply(map).with_context(|| format!("reading {}", map.display()))?;
    let text = std::fs::read_to_string(gt).with_context(|| format!("reading {}", gt.display()))?;
    let (mut predicted, mut truth) = (Vec::new(), Vec::new());
    for (vertex, segment) in parse_segments(&text)? {
        let Some(point) = points.get(vertex) else {
            bail!("vertex {vertex} not in map of {} points", points.len());
        };
        if point.label != NO_LABEL {
            predicted.push(point.label);
            truth.push(segment);
        }
    }
    let report = evaluate_segmentation(&predicted, &truth)?;
    println!("points {}", predicted.len());
    println!("accuracy {:.6}", report.accuracy);
    println!("clusters {}", report.clusters);
    println!("segments {}", report.segments);
    if report.greedy {
        println!("matching greedy");
    }
    Ok(())
}

fn plane_sparsity(cloud: &Path, max_planes: usize, threshold: f64, trials: usize, seed: u64, uniform: bool) -> Result<()> {
    if max_planes == 0 {
        bail!("--max-planes must be at least 1");
    }
    let points: Vec<(Vector3<f64>, UnitVec3)> = read_ply(cloud)
        .with_context(|| format!("reading {}", cloud.display()))?
        .iter()
        .filter_map(|p| {
            let position = Vector3::from(p.position).cast::<f64>();
            let normal = Vector3::from(p.normal).cast::<f64>();
            UnitVec3::try_new(normal, 1e-9).map(|n| (position, n))
        })
        .collect();
    let counts: Vec<usize> = (1..=max_planes).collect();
    let sampling = if uniform {
        PlaneSampling::Uniform
    } else {
        PlaneSampling::Unexplained
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = plane_sparsity_experiment(&points, &counts, threshold, trials, sampling, &mut rng);
    let mut writer = csv::Writer::from_writer(io::stdout());
    writer.write_record(["planes", "inlier_fraction"])?;
    for (planes, fraction) in curve {
        writer.write_record([planes.to_string(), format!("{fraction:.6}")])?;
    }
    writer.flush()?;
    Ok(())
}

fn synth(scene_path: &Path, frames: usize, out: &Path, noise_seed: Option<u64>) -> Result<()> {
    let scene = load_scene(scene_path)?;
    let noise = noise_seed.map(|seed| RenderNoise {
        model: Default::default(),
        seed,
    });
    let source = FrameSource::Synthetic { scene, frames, noise };
    let rendered = (0..frames)
        .map(|i| source.load(i).map(|f| (f.frame, f.ground_truth)))
        .collect::<dirslam::Result<Vec<_>>>()?;
    write_tum_sequence(out, &rendered)?;
    info!("wrote {frames} frames to {}", out.display());
    Ok(())
}
