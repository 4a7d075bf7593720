use std::path::Path;
use std::process::{Command, Output};

const SCENE: &str = "intrinsics 525 525 319.5 239.5 640 480
plane origin=2,2,0 normal=0,0,1 extent=4,4 texture=sine:0.2 segment=0
plane origin=0,2,1.5 normal=1,0,0 extent=4,3 texture=sine:0.2 segment=1
plane origin=2,0,1.5 normal=0,1,0 extent=4,3 texture=sine:0.2 segment=2
orbit center=0.3,0.4,0.5 radius=1.4 height=1.0 start=20 step=0.25 target=0.3,0.4,0.5
";

fn dirslam(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dirslam"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim().parse().ok())
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.txt");
    std::fs::write(&scene, SCENE).unwrap();
    let config = dir.path().join("run.toml");
    let toml = format!(
        "output = {:?}\n[input]\nkind = \"synthetic\"\nscene = {:?}\nframes = 8\n",
        s(&dir.path().join("out")),
        s(&scene)
    );
    std::fs::write(&config, toml).unwrap();

    let dumped = stdout(&dirslam(&["run", "--config", s(&config), "--dump-config"]));
    assert!(dumped.contains("frames = 8"), "{dumped}");

    dirslam(&["run", "--config", s(&config), "--single-thread", "--seed", "4"]);
    let out = dir.path().join("out");
    let ate = stdout(&dirslam(&[
        "eval-ate",
        "--est",
        s(&out.join("trajectory.txt")),
        "--gt",
        s(&out.join("groundtruth.txt")),
    ]));
    assert_eq!(value(&ate, "matched"), 8.0);
    assert!(value(&ate, "ate_rmse") < 0.005, "{ate}");

    let seg = stdout(&dirslam(&[
        "eval-seg",
        "--map",
        s(&out.join("map.ply")),
        "--gt",
        s(&out.join("segments_gt.txt")),
    ]));
    assert!(value(&seg, "points") > 1000.0);
    assert!((0.0..=1.0).contains(&value(&seg, "accuracy")));

    let csv = stdout(&dirslam(&["plane-sparsity", "--cloud", s(&out.join("map.ply")), "--max-planes", "5"]));
    let rows: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(csv.lines().next(), Some("planes,inlier_fraction"));
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn synth_writes_a_tum_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.txt");
    std::fs::write(&scene, SCENE).unwrap();
    let seq = dir.path().join("seq");
    dirslam(&["synth", "--scene", s(&scene), "--frames", "3", "--out", s(&seq), "--noise-seed", "1"]);
    for file in ["rgb.txt", "depth.txt", "groundtruth.txt"] {
        let text = std::fs::read_to_string(seq.join(file)).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3, "{file}");
    }
}

#[test]
fn malformed_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "seed = \"seven\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dirslam"))
        .args(["run", "--config", s(&config)])
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}
