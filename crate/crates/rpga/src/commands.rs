//! The command implementations behind the `rpga` binary.

use std::fs;
use std::path::{Path, PathBuf};

use rpga_core::analysis::{Flatness, LandscapeGrid};
use rpga_core::attack::{self, AttackState, CellObjective, SceneObjective};
use rpga_core::composite::{self, BackgroundRelighter, ParametricRelighter};
use rpga_core::detector::{detection_loss, Rect, SurrogateDetector};
use rpga_core::scene::{camera_from_config, PhysicalConfiguration};
use rpga_core::shading::HemisphereQuadrature;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::run_config::{Mode, RunConfig};
use crate::scene_file::{self, SceneFile};
use crate::{checkpoint, export, ppm};

/// Parses `pitch=..,azimuth=..,distance=..,env=..` (any order, all required).
pub fn parse_config_string(s: &str) -> Result<PhysicalConfiguration> {
    let (mut pitch, mut azimuth, mut distance, mut env) = (None, None, None, None);
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected key=value, got `{part}`")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = || {
            v.parse::<f64>()
                .map_err(|_| Error::Usage(format!("`{k}` needs a number, got `{v}`")))
        };
        let slot_taken = match k {
            "pitch" => pitch.replace(num()?).is_some(),
            "azimuth" => azimuth.replace(num()?).is_some(),
            "distance" => distance.replace(num()?).is_some(),
            "env" => env.replace(v.to_string()).is_some(),
            _ => return Err(Error::Usage(format!("unknown configuration key `{k}`"))),
        };
        if slot_taken {
            return Err(Error::Usage(format!("configuration key `{k}` given twice")));
        }
    }
    let missing = |k: &str| Error::Usage(format!("configuration is missing `{k}`"));
    Ok(PhysicalConfiguration {
        pitch_deg: pitch.ok_or_else(|| missing("pitch"))?,
        azimuth_deg: azimuth.ok_or_else(|| missing("azimuth"))?,
        distance_m: distance.ok_or_else(|| missing("distance"))?,
        env_id: env.ok_or_else(|| missing("env"))?,
    })
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map(RunConfig::load).unwrap_or_else(|| Ok(RunConfig::default()))
}

fn build_detector(cfg: &RunConfig) -> Result<SurrogateDetector> {
    Ok(SurrogateDetector::new(cfg.detector.spec())?)
}

fn build_quadrature(cfg: &RunConfig) -> Result<HemisphereQuadrature> {
    Ok(HemisphereQuadrature::canonical(cfg.quad_theta, cfg.quad_phi)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderSummary {
    pub loss: f64,
    /// Box of the detection the loss was taken from.
    pub bbox: Option<Rect>,
}

pub fn render(scene_path: &Path, config: &str, out: &Path, run_config: Option<&Path>) -> Result<RenderSummary> {
    let cfg = parse_config_string(config)?;
    let file = scene_file::load_scene(scene_path)?;
    let scene = &file.scene;
    let env = scene
        .environment(&cfg.env_id)
        .map_err(|_| Error::Usage(format!("unknown environment `{}` in configuration", cfg.env_id)))?;
    let rc = load_run_config(run_config)?;
    let detector = build_detector(&rc)?;
    let quad = build_quadrature(&rc)?;
    let (w, h) = (scene.background.width, scene.background.height);
    let camera = camera_from_config(&cfg, scene.cloud.target_center, scene.fov_deg, w, h)?.camera;
    let fg = composite::foreground_with_frozen_regions(&scene.cloud, &camera, env, &quad)?;
    let bg = ParametricRelighter.relight(&scene.background, scene.reference_environment(), env)?;
    let image = composite::composite(&fg.output, &bg)?;
    if !image.is_finite() {
        return Err(rpga_core::Error::NonFinite("rendered frame".into()).into());
    }
    let dets = detector.detect(&image)?;
    let sel = detection_loss(&dets, &scene.ground_truth)?;
    ppm::write_image(out, &image)?;
    Ok(RenderSummary {
        loss: sel.loss,
        bbox: sel.index.map(|i| dets[i].bbox),
    })
}

#[derive(Debug, Clone, Default)]
pub struct AttackOptions {
    pub scene: PathBuf,
    pub run_config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackSummary {
    pub iterations: u64,
    pub final_batch_loss: Option<f64>,
}

pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const LOSS_HISTORY: &str = "loss_history.csv";
pub const DIFFICULTY_TABLE: &str = "difficulty_table.csv";
pub const ADVERSARIAL_SCENE: &str = "scene.json";
pub const RUN_CONFIG_ECHO: &str = "run_config.json";

pub fn checkpoint_name(iteration: u64) -> String {
    format!("iter_{iteration:06}.ckpt")
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Runs (or resumes) an attack and writes every artifact into `opts.out`.
pub fn attack(opts: &AttackOptions) -> Result<AttackSummary> {
    let file = scene_file::load_scene(&opts.scene)?;
    let mut rc = load_run_config(opts.run_config.as_deref())?;
    if let Some(seed) = opts.seed {
        rc.seed = seed;
    }
    if let Some(mode) = opts.mode {
        rc.mode = mode;
    }
    let detector = build_detector(&rc)?;
    let quad = build_quadrature(&rc)?;
    let objective = SceneObjective::new(&file.scene, &detector, quad)?;

    let mut state = match &opts.resume {
        Some(path) => {
            let s = checkpoint::read(path)?;
            if s.config != rc.attack_config() {
                return Err(Error::Usage(format!(
                    "{} was written with a different run configuration",
                    path.display()
                )));
            }
            if s.params.len() != objective.num_params() || s.table.len() != objective.num_cells() {
                return Err(Error::Usage(format!("{} does not match this scene", path.display())));
            }
            if s.iteration > rc.iters {
                return Err(Error::Usage(format!(
                    "{} is at iteration {}, past the configured {}",
                    path.display(),
                    s.iteration,
                    rc.iters
                )));
            }
            s
        }
        None => AttackState::new(&objective.initial_params(), objective.num_cells(), rc.attack_config())?,
    };

    let ckpt_dir = opts.out.join("checkpoints");
    create_dir(&ckpt_dir)?;
    export::write_text(&opts.out.join(RUN_CONFIG_ECHO), &rc.to_json()?)?;
    attack::run_attack(&mut state, &objective, rc.iters, rc.checkpoint_every, |s| {
        checkpoint::write(&ckpt_dir.join(checkpoint_name(s.iteration)), s)
    })?;
    write_attack_artifacts(&file, &state, &opts.out)?;
    Ok(AttackSummary {
        iterations: state.iteration,
        final_batch_loss: state.loss_history.last().copied(),
    })
}

fn write_attack_artifacts(file: &SceneFile, state: &AttackState, out: &Path) -> Result<()> {
    checkpoint::write(&out.join(FINAL_CHECKPOINT), state)?;
    export::write_text(&out.join(LOSS_HISTORY), &export::loss_history_csv(&state.loss_history))?;
    if state.config.mode == rpga_core::attack::SamplingMode::Hpcm {
        export::write_text(
            &out.join(DIFFICULTY_TABLE),
            &export::difficulty_csv(&file.scene.space, &state.table)?,
        )?;
    }
    let mut adv = SceneFile::with_default_paths(file.scene.clone());
    adv.scene.cloud.set_camo_albedo(&state.params)?;
    scene_file::save_scene(&adv, &out.join(ADVERSARIAL_SCENE))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub cells: usize,
    pub mean: f64,
    pub max: f64,
    pub variance: f64,
    pub max_minus_mean: f64,
}

impl From<(usize, Flatness)> for LandscapeReport {
    fn from((cells, f): (usize, Flatness)) -> Self {
        LandscapeReport {
            cells,
            mean: f.mean,
            max: f.max,
            variance: f.variance,
            max_minus_mean: f.max_minus_mean,
        }
    }
}

/// Sweeps every cell, writes `<prefix>_landscape.csv`, `<prefix>_heatmap.ppm`
/// and `<prefix>_surface.csv`, and returns the flatness metrics.
pub fn landscape(
    scene_path: &Path,
    albedo_ckpt: Option<&Path>,
    run_config: Option<&Path>,
    out_prefix: &Path,
    threshold: Option<f64>,
) -> Result<LandscapeReport> {
    let mut file = scene_file::load_scene(scene_path)?;
    if let Some(p) = albedo_ckpt {
        let state = checkpoint::read(p)?;
        file.scene.cloud.set_camo_albedo(&state.params)?;
    }
    let rc = load_run_config(run_config)?;
    let detector = build_detector(&rc)?;
    let quad = build_quadrature(&rc)?;
    let objective = SceneObjective::new(&file.scene, &detector, quad)?;
    let losses = attack::evaluate_grid(&objective, &objective.initial_params())?;
    let grid = LandscapeGrid::new(file.scene.space.clone(), losses)?;
    let with_suffix = |s: &str| {
        let mut name = out_prefix.as_os_str().to_owned();
        name.push(s);
        PathBuf::from(name)
    };
    if let Some(dir) = out_prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    export::export_heatmap(&grid, &with_suffix("_landscape.csv"), &with_suffix("_heatmap.ppm"), threshold)?;
    export::write_text(&with_suffix("_surface.csv"), &export::surface_csv(&grid.losses))?;
    Ok((grid.losses.len(), grid.flatness()?).into())
}
