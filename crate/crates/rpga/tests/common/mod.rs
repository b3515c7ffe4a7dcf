#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rpga::scene_file::{save_scene, SceneFile};
use rpga_core::scene::{discretize_space, EnvironmentMap, GaussianCloud, GaussianPrimitive, GroundTruthBox, Scene};
use rpga_core::{Image, Vec3};

/// A 16x16 scene with a bright camouflage slab and a frozen dark block,
/// 4 cells.
pub fn tiny_scene() -> Scene {
    let mut slab = GaussianPrimitive::isotropic(Vec3::new(0.0, 0.0, 0.0), 0.8);
    slab.scale.z = 0.05;
    slab.albedo = [0.9, 0.85, 0.8];
    slab.camo = true;
    let mut side = GaussianPrimitive::isotropic(Vec3::new(0.6, 0.3, 0.3), 0.35);
    side.albedo = [0.1, 0.1, 0.12];
    let mut top = GaussianPrimitive::isotropic(Vec3::new(-0.4, -0.2, 0.2), 0.4);
    top.albedo = [0.7, 0.2, 0.2];
    top.camo = true;
    let envs = vec![
        EnvironmentMap::constant("noon", 8, 4, [1.0, 0.95, 0.9], [0.05; 3]),
        EnvironmentMap::constant("dusk", 8, 4, [0.5, 0.3, 0.2], [0.02; 3]),
    ];
    let ids: Vec<String> = envs.iter().map(|e| e.id.clone()).collect();
    Scene {
        cloud: GaussianCloud {
            primitives: vec![slab, side, top],
            target_center: Vec3::zeros(),
        },
        environments: envs,
        background: Image::filled(16, 16, [0.25, 0.24, 0.2]),
        ground_truth: GroundTruthBox {
            xmin: 3.0,
            ymin: 3.0,
            xmax: 13.0,
            ymax: 13.0,
            class_id: 0,
        },
        space: discretize_space(&[30.0], &[0.0, 120.0], &[5.0], &ids).unwrap(),
        fov_deg: 40.0,
    }
}

pub fn write_tiny_scene(dir: &Path) -> PathBuf {
    let path = dir.join("scene.json");
    save_scene(&SceneFile::with_default_paths(tiny_scene()), &path).unwrap();
    path
}

pub const TINY_RUN: &str = r#"{
  "iters": 6,
  "checkpoint_every": 2,
  "batch": 3,
  "lr": 0.05,
  "quad_theta": 2,
  "quad_phi": 4,
  "optimizer": "adam",
  "detector": {"scales": [8, 12]}
}"#;

pub fn write_run_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn rpga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpga")).args(args).output().unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
