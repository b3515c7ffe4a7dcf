//! Scene files: a JSON document plus per-environment radiance blobs
//! (`H×W×3` little-endian f32) and a PPM background, all addressed relative
//! to the document's directory.

use std::fs;
use std::path::{Path, PathBuf};

use rpga_core::scene::{
    discretize_space, EnvironmentMap, GaussianCloud, GaussianPrimitive, GroundTruthBox, Scene,
    DEFAULT_FOV_DEG,
};
use rpga_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{json, ppm};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianDoc {
    mean: [f64; 3],
    scale: [f64; 3],
    rotation: [f64; 4],
    opacity: f64,
    albedo: [f64; 3],
    roughness: f64,
    metallic: f64,
    camo: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentDoc {
    id: String,
    width: usize,
    height: usize,
    radiance_path: String,
    ambient: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthDoc {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
    class_id: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    pitch: Vec<f64>,
    azimuth: Vec<f64>,
    distance: Vec<f64>,
    envs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    gaussians: Vec<GaussianDoc>,
    environments: Vec<EnvironmentDoc>,
    background_path: String,
    ground_truth: GroundTruthDoc,
    config_space: SpaceDoc,
    target_center: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fov_deg: Option<f64>,
}

/// A scene together with the relative asset paths it was stored under.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub scene: Scene,
    /// One per environment, same order.
    pub radiance_paths: Vec<String>,
    pub background_path: String,
}

impl SceneFile {
    /// Default asset names: `env_<id>.bin` and `background.ppm`.
    pub fn with_default_paths(scene: Scene) -> Self {
        let radiance_paths = scene
            .environments
            .iter()
            .map(|e| format!("env_{}.bin", e.id))
            .collect();
        SceneFile {
            scene,
            radiance_paths,
            background_path: "background.ppm".into(),
        }
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_radiance(path: &Path, width: usize, height: usize, field: &str) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let n = width * height * 3;
    if bytes.len() != 4 * n {
        return Err(Error::Format(format!(
            "{field}: {} holds {} bytes, expected {} for {width}x{height}x3 f32",
            path.display(),
            bytes.len(),
            4 * n
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn encode_radiance(radiance: &[f64]) -> Vec<u8> {
    radiance.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect()
}

pub fn load_scene(path: &Path) -> Result<SceneFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: SceneDoc = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let dir = base_dir(path);

    let mut environments = Vec::with_capacity(doc.environments.len());
    for (i, e) in doc.environments.iter().enumerate() {
        let field = format!("environments[{i}].radiance_path");
        let radiance = read_radiance(&dir.join(&e.radiance_path), e.width, e.height, &field)?;
        environments.push(EnvironmentMap {
            id: e.id.clone(),
            width: e.width,
            height: e.height,
            radiance,
            ambient: e.ambient,
        });
    }
    let background = ppm::read_image(&dir.join(&doc.background_path))?;
    let primitives = doc
        .gaussians
        .iter()
        .map(|g| GaussianPrimitive {
            mean: Vec3::from(g.mean),
            scale: Vec3::from(g.scale),
            rotation: g.rotation,
            opacity: g.opacity,
            albedo: g.albedo,
            roughness: g.roughness,
            metallic: g.metallic,
            camo: g.camo,
        })
        .collect();
    let s = &doc.config_space;
    let space = discretize_space(&s.pitch, &s.azimuth, &s.distance, &s.envs)?;
    let gt = &doc.ground_truth;
    let scene = Scene {
        cloud: GaussianCloud {
            primitives,
            target_center: Vec3::from(doc.target_center),
        },
        environments,
        background,
        ground_truth: GroundTruthBox {
            xmin: gt.xmin,
            ymin: gt.ymin,
            xmax: gt.xmax,
            ymax: gt.ymax,
            class_id: gt.class_id,
        },
        space,
        fov_deg: doc.fov_deg.unwrap_or(DEFAULT_FOV_DEG),
    };
    scene.validate()?;
    Ok(SceneFile {
        scene,
        radiance_paths: doc.environments.into_iter().map(|e| e.radiance_path).collect(),
        background_path: doc.background_path,
    })
}

fn to_doc(file: &SceneFile) -> SceneDoc {
    let s = &file.scene;
    SceneDoc {
        gaussians: s
            .cloud
            .primitives
            .iter()
            .map(|g| GaussianDoc {
                mean: g.mean.into(),
                scale: g.scale.into(),
                rotation: g.rotation,
                opacity: g.opacity,
                albedo: g.albedo,
                roughness: g.roughness,
                metallic: g.metallic,
                camo: g.camo,
            })
            .collect(),
        environments: s
            .environments
            .iter()
            .zip(&file.radiance_paths)
            .map(|(e, p)| EnvironmentDoc {
                id: e.id.clone(),
                width: e.width,
                height: e.height,
                radiance_path: p.clone(),
                ambient: e.ambient,
            })
            .collect(),
        background_path: file.background_path.clone(),
        ground_truth: GroundTruthDoc {
            xmin: s.ground_truth.xmin,
            ymin: s.ground_truth.ymin,
            xmax: s.ground_truth.xmax,
            ymax: s.ground_truth.ymax,
            class_id: s.ground_truth.class_id,
        },
        config_space: SpaceDoc {
            pitch: s.space.pitch_bins.clone(),
            azimuth: s.space.azimuth_bins.clone(),
            distance: s.space.distance_bins.clone(),
            envs: s.space.env_ids.clone(),
        },
        target_center: s.cloud.target_center.into(),
        fov_deg: (s.fov_deg != DEFAULT_FOV_DEG).then_some(s.fov_deg),
    }
}

/// The JSON document alone, without touching assets.
pub fn scene_json(file: &SceneFile) -> Result<String> {
    file.scene.validate()?;
    if file.radiance_paths.len() != file.scene.environments.len() {
        return Err(Error::Usage("one radiance path per environment is required".into()));
    }
    json::to_canonical_string(&to_doc(file))
}

/// Writes the document and its assets. Nothing is written unless the scene
/// validates.
pub fn save_scene(file: &SceneFile, path: &Path) -> Result<()> {
    let text = scene_json(file)?;
    let dir = base_dir(path);
    for (env, rel) in file.scene.environments.iter().zip(&file.radiance_paths) {
        let p = dir.join(rel);
        fs::write(&p, encode_radiance(&env.radiance)).map_err(|e| Error::io(&p, e))?;
    }
    ppm::write_image(&dir.join(&file.background_path), &file.scene.background)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
