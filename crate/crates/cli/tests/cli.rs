use std::path::Path;
use std::process::Command;

use mononav::config::RunConfig;
use mononav::eval::Metrics;
use mononav::nn::PolicyConfig;
use mononav::trainer::Checkpoint;
use mononav::worldsim::CameraModel;
use mononav_cli::{depth_gray, load_scene, parse_scans, pgm};

fn mononav(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mononav")).args(args).env("MONONAV_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mononav(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Small network, tiny camera, a few short updates.
fn tiny_config(dir: &Path) -> String {
    let mut run = RunConfig { camera: CameraModel::with_size(8, 16), ..RunConfig::default() };
    run.policy = PolicyConfig { conv_channels: 4, feg_channels: 4, dense: 16, merge: 16, hidden: 16, ..PolicyConfig::default() };
    run.trainer.batch_size = 64;
    run.trainer.lstm_unroll = 5;
    run.trainer.num_envs = 2;
    run.trainer.total_episodes = 4;
    run.trainer.max_episode_steps = 30;
    let path = dir.join("config.json");
    std::fs::write(&path, run.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_pgm(bytes: &[u8]) -> (usize, usize, Vec<u8>) {
    let header: Vec<&[u8]> = bytes.splitn(4, |&b| b == b'\n').collect();
    assert_eq!(header[0], b"P5");
    let dims: Vec<usize> = std::str::from_utf8(header[1]).unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    assert_eq!(header[2], b"255");
    (dims[0], dims[1], header[3].to_vec())
}

#[test]
fn pgm_layout_and_gray_scale() {
    let img = pgm(3, 2, &[0, 1, 2, 3, 4, 5]);
    assert_eq!(read_pgm(&img), (3, 2, vec![0, 1, 2, 3, 4, 5]));
    assert_eq!(depth_gray(&[0.0, 3.0, 6.0, 9.0], 6.0), vec![0, 128, 255, 255]);
}

#[test]
fn scans_parse_with_comments_and_reject_bad_values() {
    let scans = parse_scans("# header\n1.0, 2.0,3\n\n6,0.5,1\n", 6.0).unwrap();
    assert_eq!(scans.len(), 2);
    assert_eq!(scans[0].ranges, vec![1.0, 2.0, 3.0]);
    assert!(parse_scans("1,x\n", 6.0).is_err());
    assert!(parse_scans("1,7\n", 6.0).is_err());
}

#[test]
fn scenes_resolve_from_ids_and_files() {
    assert_eq!(load_scene("test_random:3").unwrap().spawns.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scene.json");
    std::fs::write(&p, load_scene("stage1_open:2").unwrap().to_json()).unwrap();
    assert_eq!(load_scene(p.to_str().unwrap()).unwrap().spawns.len(), 2);
    assert!(load_scene("no_such_scene").is_err());
}

#[test]
fn render_slice_writes_consistent_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("slice");
    ok(&["render-slice", "--config", &cfg, "--scenario", "single_obstacle:table", "--seed", "3", "--out-dir", out.to_str().unwrap()]);
    for name in ["depth.pgm", "mask.pgm", "masked_depth.pgm"] {
        let (w, h, px) = read_pgm(&std::fs::read(out.join(name)).unwrap());
        assert_eq!((w, h, px.len()), (16, 8, 128), "{name}");
    }
    let mask = std::fs::read_to_string(out.join("mask.csv")).unwrap();
    assert_eq!(mask.lines().count(), 8);
    assert!(mask.lines().all(|l| l.split(',').count() == 16));
    let laser = std::fs::read_to_string(out.join("laser.csv")).unwrap();
    assert_eq!(laser.lines().count(), 17);

    // an empty world reads max range everywhere
    let far = dir.path().join("far");
    ok(&["render-slice", "--config", &cfg, "--scenario", "empty:1", "--pose=0.5,-0.5,3.14159", "--out-dir", far.to_str().unwrap()]);
    let laser = std::fs::read_to_string(far.join("laser.csv")).unwrap();
    assert!(laser.lines().skip(1).all(|l| l.ends_with(",6")), "{laser}");
}

#[test]
fn augment_is_seeded_and_shape_preserving() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scans.csv");
    std::fs::write(&input, "2,2,2,2,2,2,2,2,5,5,5,5,5,5,5,5\n1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1\n").unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&["augment", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap(), "--seed", seed]);
        std::fs::read_to_string(out).unwrap()
    };
    let (a, b, c) = (run("1", "a.csv"), run("1", "b.csv"), run("2", "c.csv"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let scans = parse_scans(&a, 6.0).unwrap();
    assert_eq!(scans.len(), 2);
    assert!(scans.iter().all(|s| s.len() == 16));
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let ckpt = dir.path().join("ckpt.json");
    let log = dir.path().join("train.jsonl");
    ok(&["train", "--config", &cfg, "--stage", "stage1_small:2", "--out", ckpt.to_str().unwrap(), "--log", log.to_str().unwrap()]);
    let ck = Checkpoint::load(&ckpt).unwrap();
    assert!(ck.trainer.as_ref().unwrap().episodes_done >= 4);
    let lines = std::fs::read_to_string(&log).unwrap();
    assert!(lines.lines().count() >= 1);
    for l in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v.get("kl").is_some() && v.get("success_rate").is_some());
    }

    let metrics = dir.path().join("m.json");
    let traj = dir.path().join("traj");
    ok(&[
        "eval",
        "--config",
        &cfg,
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--scenario",
        "test_random:2",
        "--trials",
        "3",
        "--seed",
        "9",
        "--out",
        metrics.to_str().unwrap(),
        "--trajectories",
        traj.to_str().unwrap(),
    ]);
    let m: Metrics = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m.n_trials, 6);
    assert_eq!(m.n_success + m.n_collision + m.n_timeout, 6);
    assert_eq!(std::fs::read_dir(&traj).unwrap().count(), 3 * (1 + 2));

    // resuming continues the episode count
    let ckpt2 = dir.path().join("ckpt2.json");
    ok(&["train", "--config", &cfg, "--stage", "stage1_small:2", "--resume", ckpt.to_str().unwrap(), "--episodes", "8", "--out", ckpt2.to_str().unwrap()]);
    assert!(Checkpoint::load(&ckpt2).unwrap().trainer.unwrap().episodes_done >= 8);

    // a config with a different camera is refused
    let other = dir.path().join("other.json");
    std::fs::write(&other, RunConfig { camera: CameraModel::with_size(8, 24), ..RunConfig::default() }.to_json()).unwrap();
    let out = mononav(&["eval", "--config", other.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap(), "--scenario", "test_random:2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));

    // ablation over two sensing variants of the same checkpoint
    let manifest = dir.path().join("manifest.json");
    std::fs::write(
        &manifest,
        r#"[{"architecture": "lstm_feg", "fov_deg": 90, "sensing": "depth_minpool_semantic", "augmentation": false, "checkpoint": "ckpt.json"},
            {"architecture": "lstm_feg", "fov_deg": 90, "sensing": "depth_1d_slice", "augmentation": false, "checkpoint": "ckpt.json"}]"#,
    )
    .unwrap();
    let table = dir.path().join("ablation.csv");
    ok(&[
        "ablate",
        "--config",
        &cfg,
        "--manifest",
        manifest.to_str().unwrap(),
        "--scenario",
        "single_obstacle:table",
        "--scenario",
        "single_obstacle:cone",
        "--trials",
        "2",
        "--out",
        table.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);

    let sweep = dir.path().join("sweep.csv");
    ok(&[
        "limit-sweep",
        "--config",
        &cfg,
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--occupancies",
        "0.2,0.9",
        "--distances",
        "1.5,3",
        "--trials",
        "2",
        "--out",
        sweep.to_str().unwrap(),
    ]);
    let rows: Vec<Vec<f64>> = std::fs::read_to_string(&sweep).unwrap().lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    for (r, want) in rows.iter().zip([0.2, 0.9, 0.2, 0.9]) {
        assert!((r[2] - want).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn bad_invocations_fail_cleanly() {
    assert!(!mononav(&["eval", "--checkpoint", "/nonexistent.json", "--scenario", "test_random"]).status.success());
    assert!(!mononav(&["limit-sweep", "--checkpoint", "x.json", "--widths", "1", "--occupancies", "0.5", "--distances", "1"]).status.success());
    assert!(!mononav(&["frobnicate"]).status.success());
}
