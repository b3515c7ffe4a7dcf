mod common;

use std::fs;

use common::{rpga, s};
use rpga::checkpoint;
use rpga::scene_file::load_scene;

#[test]
fn render_writes_identical_frames() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let (a, b) = (dir.path().join("a.ppm"), dir.path().join("b.ppm"));
    for out in [&a, &b] {
        let o = rpga(&["render", "--scene", s(&scene), "--config", "pitch=30,azimuth=0,distance=5,env=noon", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(json["loss"].is_number());
    }
    let bytes = fs::read(&a).unwrap();
    assert!(bytes.starts_with(b"P6\n16 16\n255\n"));
    assert_eq!(bytes, fs::read(&b).unwrap());
}

#[test]
fn render_rejects_unknown_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let out = dir.path().join("x.ppm");
    let o = rpga(&["render", "--scene", s(&scene), "--config", "pitch=30,azimuth=0,distance=5,env=fog", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fog"));
    assert!(!out.exists());
}

#[test]
fn invalid_scene_exits_2_and_bad_usage_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let text = fs::read_to_string(&scene).unwrap().replacen("\"roughness\": 1", "\"roughness\": -1", 1);
    fs::write(&scene, text).unwrap();
    let o = rpga(&["render", "--scene", s(&scene), "--config", "pitch=30,azimuth=0,distance=5,env=noon", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(rpga(&["render"]).status.code(), Some(1));
    assert_eq!(rpga(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn zero_iterations_write_initial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let run = common::write_run_config(dir.path(), r#"{"iters": 0, "quad_theta": 2, "quad_phi": 4}"#);
    let out = dir.path().join("out");
    let o = rpga(&["attack", "--scene", s(&scene), "--run-config", s(&run), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("loss_history.csv")).unwrap(), "iteration,mean_loss\n");
    assert_eq!(fs::read_dir(out.join("checkpoints")).unwrap().count(), 0);
    let state = checkpoint::read(&out.join("final.ckpt")).unwrap();
    assert_eq!(state.iteration, 0);
    // The adversarial scene is the input scene at the optimizer's f32 precision.
    let input = load_scene(&scene).unwrap().scene;
    let adv = load_scene(&out.join("scene.json")).unwrap().scene;
    let quantized: Vec<f64> = input.cloud.camo_albedo().iter().map(|v| *v as f32 as f64).collect();
    let adv_albedo: Vec<f64> = adv.cloud.camo_albedo().iter().map(|v| *v as f32 as f64).collect();
    assert_eq!(adv_albedo, quantized);
    for (a, b) in adv.cloud.primitives.iter().zip(&input.cloud.primitives) {
        assert_eq!((a.mean, a.scale, a.opacity, a.camo), (b.mean, b.scale, b.opacity, b.camo));
        if !a.camo {
            assert_eq!(a.albedo, b.albedo);
        }
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let run = common::write_run_config(dir.path(), common::TINY_RUN);
    let full = dir.path().join("full");
    let o = rpga(&["attack", "--scene", s(&scene), "--run-config", s(&run), "--out", s(&full)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let resumed = dir.path().join("resumed");
    let ckpt = full.join("checkpoints").join("iter_000002.ckpt");
    let o = rpga(&["attack", "--scene", s(&scene), "--run-config", s(&run), "--out", s(&resumed), "--resume", s(&ckpt)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["final.ckpt", "loss_history.csv", "difficulty_table.csv", "scene.json", "checkpoints/iter_000006.ckpt"] {
        assert_eq!(fs::read(full.join(name)).unwrap(), fs::read(resumed.join(name)).unwrap(), "{name}");
    }

    // A checkpoint from another configuration is refused.
    let other = common::write_run_config(dir.path(), &common::TINY_RUN.replace("\"lr\": 0.05", "\"lr\": 0.1"));
    let o = rpga(&["attack", "--scene", s(&scene), "--run-config", s(&other), "--out", s(&resumed), "--resume", s(&ckpt)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eot_and_hpcm_share_the_first_batch() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let run = common::write_run_config(dir.path(), common::TINY_RUN);
    let mut states = Vec::new();
    for mode in ["eot", "hpcm"] {
        let out = dir.path().join(mode);
        let o = rpga(&["attack", "--scene", s(&scene), "--run-config", s(&run), "--out", s(&out), "--mode", mode, "--seed", "9"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        states.push((
            checkpoint::read(&out.join("checkpoints").join("iter_000002.ckpt")).unwrap(),
            checkpoint::read(&out.join("final.ckpt")).unwrap(),
        ));
        assert_eq!(out.join("difficulty_table.csv").exists(), mode == "hpcm");
    }
    let (eot, hpcm) = (&states[0], &states[1]);
    assert_eq!(eot.1.loss_history[0], hpcm.1.loss_history[0]);
    assert_ne!(eot.1.loss_history, hpcm.1.loss_history);
    assert_eq!(eot.0.rng.state().seed, 9);
}

#[test]
fn landscape_is_deterministic_and_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let run = common::write_run_config(dir.path(), common::TINY_RUN);
    let mut csvs = Vec::new();
    for tag in ["a", "b"] {
        let prefix = dir.path().join("land").join(tag);
        let o = rpga(&["landscape", "--scene", s(&scene), "--run-config", s(&run), "--out", s(&prefix), "--threshold", "0.5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(m["cells"], 4);
        assert!(m["max"].as_f64().unwrap() >= m["mean"].as_f64().unwrap());
        let csv = fs::read_to_string(dir.path().join("land").join(format!("{tag}_landscape.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2);
        let surface = fs::read_to_string(dir.path().join("land").join(format!("{tag}_surface.csv"))).unwrap();
        assert_eq!(surface.lines().count(), 1 + 4);
        csvs.push(csv);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn single_cell_landscape_has_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let scene = common::write_tiny_scene(dir.path());
    let text = fs::read_to_string(&scene)
        .unwrap()
        .replace("\"azimuth\": [0, 120]", "\"azimuth\": [0]")
        .replace("\"envs\": [\"noon\", \"dusk\"]", "\"envs\": [\"noon\"]");
    fs::write(&scene, text).unwrap();
    let prefix = dir.path().join("one");
    let o = rpga(&["landscape", "--scene", s(&scene), "--out", s(&prefix)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["cells"], 1);
    assert_eq!(m["variance"], 0.0);
}

#[test]
fn verify_passes() {
    let o = rpga(&["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("PASS")));
}
