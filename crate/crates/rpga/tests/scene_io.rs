mod common;

use std::fs;

use rpga::scene_file::{load_scene, save_scene, scene_json, SceneFile};
use rpga::Error;
use rpga_core::scene::{discretize_space, EnvironmentMap, GaussianCloud, GaussianPrimitive, GroundTruthBox, Scene};
use rpga_core::{Image, Vec3};

fn minimal() -> Scene {
    let env = EnvironmentMap::constant("only", 4, 2, [1.0; 3], [0.0; 3]);
    Scene {
        cloud: GaussianCloud {
            primitives: vec![GaussianPrimitive::isotropic(Vec3::zeros(), 0.5)],
            target_center: Vec3::zeros(),
        },
        environments: vec![env],
        background: Image::filled(8, 8, [0.5; 3]),
        ground_truth: GroundTruthBox {
            xmin: 1.0,
            ymin: 1.0,
            xmax: 7.0,
            ymax: 7.0,
            class_id: 0,
        },
        space: discretize_space(&[20.0], &[0.0], &[4.0], &["only".to_string()]).unwrap(),
        fov_deg: 40.0,
    }
}

#[test]
fn minimal_scene_loads_with_one_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("min.json");
    save_scene(&SceneFile::with_default_paths(minimal()), &path).unwrap();
    let back = load_scene(&path).unwrap();
    assert_eq!(back.scene.space.len(), 1);
    assert_eq!(back.scene.cloud.len(), 1);
}

#[test]
fn save_load_save_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = common::tiny_scene();
    scene.cloud.primitives[0].albedo = [0.123456789123, 1.0 / 3.0, 0.7];
    scene.cloud.primitives[1].mean = Vec3::new(std::f64::consts::PI, -1e-7, 2.5e5);
    let first = dir.path().join("a.json");
    save_scene(&SceneFile::with_default_paths(scene), &first).unwrap();
    let loaded = load_scene(&first).unwrap();
    let second_dir = dir.path().join("b");
    fs::create_dir(&second_dir).unwrap();
    let second = second_dir.join("a.json");
    save_scene(&loaded, &second).unwrap();
    for name in ["a.json", "env_noon.bin", "env_dusk.bin", "background.ppm"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(second_dir.join(name)).unwrap(),
            "{name}"
        );
    }
    let text = fs::read_to_string(&first).unwrap();
    assert!(text.contains("0.123456789,"));
    assert!(text.contains("0.333333333,"));
    assert_eq!(load_scene(&second).unwrap(), loaded);
}

#[test]
fn unknown_environment_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    save_scene(&SceneFile::with_default_paths(minimal()), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap().replace("\"envs\": [\"only\"]", "\"envs\": [\"noon\"]");
    fs::write(&path, text).unwrap();
    let err = load_scene(&path).unwrap_err();
    assert!(err.to_string().contains("noon"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn invariant_violation_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    save_scene(&SceneFile::with_default_paths(minimal()), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap().replace("\"opacity\": 1", "\"opacity\": 1.5");
    fs::write(&path, text).unwrap();
    let err = load_scene(&path).unwrap_err();
    assert!(err.to_string().contains("gaussians[0].opacity"), "{err}");
}

#[test]
fn nan_albedo_is_rejected_before_anything_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = minimal();
    scene.cloud.primitives[0].albedo[1] = f64::NAN;
    let path = dir.path().join("nan.json");
    let file = SceneFile::with_default_paths(scene);
    assert!(matches!(scene_json(&file), Err(Error::Core(_))));
    assert!(save_scene(&file, &path).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn malformed_inputs_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    save_scene(&SceneFile::with_default_paths(minimal()), &path).unwrap();
    fs::write(dir.path().join("env_only.bin"), [0u8; 7]).unwrap();
    assert_eq!(load_scene(&path).unwrap_err().exit_code(), 1);
    fs::write(&path, "{ not json").unwrap();
    assert_eq!(load_scene(&path).unwrap_err().exit_code(), 1);
    assert_eq!(load_scene(&dir.path().join("missing.json")).unwrap_err().exit_code(), 1);
}
