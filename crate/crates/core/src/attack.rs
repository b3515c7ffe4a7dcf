//! The attack loop: sample configuration cells (uniformly, or by difficulty),
//! evaluate per-cell loss and albedo gradient, and take a clamped descent
//! step on the camouflage albedo.
//!
//! Anything that maps `(cell, parameters)` to a loss and gradient can be
//! attacked through [`CellObjective`]; the full render/detect chain is
//! [`SceneObjective`], and `analysis::ToyProblem` is a cheap stand-in with
//! closed-form gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::composite::{self, BackgroundRelighter, ParametricRelighter};
use crate::detector::{Detection, LossSelection, SurrogateDetector};
use crate::hpcm::{self, GlobalDifficultyTable};
use crate::image::Image;
use crate::math;
use crate::par;
use crate::render::RenderOutput;
use crate::rng::CounterRng;
use crate::scene::{Camera, Scene};
use crate::shading::HemisphereQuadrature;
use crate::{Error, Result};

/// A loss over a discrete set of configuration cells with a shared
/// parameter vector.
pub trait CellObjective: Sync {
    fn num_cells(&self) -> usize;
    fn num_params(&self) -> usize;
    fn loss_and_grad(&self, cell: usize, params: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn loss(&self, cell: usize, params: &[f64]) -> Result<f64> {
        Ok(self.loss_and_grad(cell, params)?.0)
    }
}

/// Loss of every cell under fixed parameters, in cell order.
pub fn evaluate_grid<O: CellObjective>(objective: &O, params: &[f64]) -> Result<Vec<f64>> {
    par::map_indexed(objective.num_cells(), |i| objective.loss(i, params))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Uniform over cells.
    Eot,
    /// Softmax over the difficulty table.
    Hpcm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub mode: SamplingMode,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub tau: f64,
    pub mu: f64,
    pub init_score: f64,
    pub optimizer: OptimizerKind,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            mode: SamplingMode::Hpcm,
            learning_rate: 0.01,
            batch_size: 8,
            seed: 0,
            tau: hpcm::DEFAULT_TEMPERATURE,
            mu: hpcm::DEFAULT_MOMENTUM,
            init_score: hpcm::DEFAULT_INIT_SCORE,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

/// Parameters are stored at `f32` precision so that checkpoints holding
/// `f32` albedo resume bit-exactly.
#[inline]
pub fn quantize(x: f64) -> f64 {
    x as f32 as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackState {
    pub params: Vec<f64>,
    pub iteration: u64,
    pub config: AttackConfig,
    pub rng: CounterRng,
    /// Mean batch loss per completed iteration.
    pub loss_history: Vec<f64>,
    /// Difficulty table; only updated in [`SamplingMode::Hpcm`].
    pub table: GlobalDifficultyTable,
    /// First and second moments for [`OptimizerKind::Adam`].
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
}

impl AttackState {
    pub fn new(initial_params: &[f64], num_cells: usize, config: AttackConfig) -> Result<Self> {
        if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::invalid("lr", "learning rate must be finite and >= 0"));
        }
        if config.batch_size == 0 {
            return Err(Error::invalid("batch", "batch size must be >= 1"));
        }
        let table = hpcm::init_table(num_cells, config.init_score, config.mu, config.tau)?;
        let params = initial_params.iter().map(|p| quantize(p.clamp(0.0, 1.0))).collect();
        let n = initial_params.len();
        Ok(AttackState {
            params,
            iteration: 0,
            rng: CounterRng::new(config.seed),
            config,
            loss_history: Vec::new(),
            table,
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub cells: Vec<usize>,
    pub losses: Vec<f64>,
    pub mean_loss: f64,
    pub gradient: Vec<f64>,
}

/// Probabilities used to draw the next batch.
pub fn sampling_distribution(state: &AttackState) -> Vec<f64> {
    match state.config.mode {
        SamplingMode::Hpcm => state.table.sampling_probs(),
        SamplingMode::Eot => {
            let q = state.table.len();
            vec![1.0 / q as f64; q]
        }
    }
}

/// One optimization step. On error the state is left untouched.
pub fn attack_step<O: CellObjective>(state: &mut AttackState, objective: &O) -> Result<StepReport> {
    if objective.num_params() != state.params.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "objective has {} parameters, state has {}",
            objective.num_params(),
            state.params.len()
        )));
    }
    if objective.num_cells() != state.table.len() {
        return Err(Error::DimensionMismatch("objective and table disagree on cell count".into()));
    }
    let b = state.config.batch_size;
    let probs = sampling_distribution(state);
    let mut rng = state.rng.clone();
    let cells: Vec<usize> = (0..b).map(|_| hpcm::sample_index(&probs, &mut rng)).collect();

    let params = &state.params;
    let lanes: Vec<(f64, Vec<f64>)> = par::map_indexed(b, |k| objective.loss_and_grad(cells[k], params))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut grad = vec![0.0; params.len()];
    let mut loss_sum = 0.0;
    for (loss, g) in &lanes {
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("per-cell loss or gradient".into()));
        }
        loss_sum += loss;
        for (a, v) in grad.iter_mut().zip(g) {
            *a += v;
        }
    }
    let inv_b = 1.0 / b as f64;
    grad.iter_mut().for_each(|g| *g *= inv_b);
    let mean_loss = loss_sum * inv_b;

    let lr = state.config.learning_rate;
    let t = (state.iteration + 1) as f64;
    let mut new_params = state.params.clone();
    let (mut m, mut v) = (state.adam_m.clone(), state.adam_v.clone());
    match state.config.optimizer {
        OptimizerKind::Sgd => {
            for (p, g) in new_params.iter_mut().zip(&grad) {
                *p = quantize((*p - lr * g).clamp(0.0, 1.0));
            }
        }
        OptimizerKind::Adam { beta1, beta2, eps } => {
            let c1 = 1.0 - libm::pow(beta1, t);
            let c2 = 1.0 - libm::pow(beta2, t);
            for i in 0..new_params.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                let step = lr * (m[i] / c1) / (math::sqrt(v[i] / c2) + eps);
                new_params[i] = quantize((new_params[i] - step).clamp(0.0, 1.0));
            }
        }
    }

    let mut table = state.table.clone();
    if state.config.mode == SamplingMode::Hpcm {
        for (cell, (loss, _)) in cells.iter().zip(&lanes) {
            table.update_score(*cell, *loss)?;
        }
    }

    state.params = new_params;
    state.adam_m = m;
    state.adam_v = v;
    state.table = table;
    state.rng = rng;
    state.iteration += 1;
    state.loss_history.push(mean_loss);
    Ok(StepReport {
        cells,
        losses: lanes.iter().map(|(l, _)| *l).collect(),
        mean_loss,
        gradient: grad,
    })
}

/// Steps until `state.iteration == target_iters`, calling `on_checkpoint`
/// after every iteration divisible by `checkpoint_every` (0 disables).
pub fn run_attack<O, F, E>(
    state: &mut AttackState,
    objective: &O,
    target_iters: u64,
    checkpoint_every: u64,
    mut on_checkpoint: F,
) -> core::result::Result<(), E>
where
    O: CellObjective,
    F: FnMut(&AttackState) -> core::result::Result<(), E>,
    E: From<Error>,
{
    while state.iteration < target_iters {
        attack_step(state, objective)?;
        if checkpoint_every > 0 && state.iteration % checkpoint_every == 0 {
            on_checkpoint(state)?;
        }
    }
    Ok(())
}

/// Everything produced by one forward pass of the scene chain.
#[derive(Debug, Clone)]
pub struct Frame {
    pub camera: Camera,
    pub foreground: RenderOutput,
    pub composite: Image,
    pub detections: Vec<Detection>,
    pub selection: LossSelection,
}

/// The full render -> composite -> detect chain as a [`CellObjective`]
/// over the camouflage albedo.
pub struct SceneObjective<'a> {
    pub scene: &'a Scene,
    pub detector: &'a SurrogateDetector,
    pub quad: HemisphereQuadrature,
    cameras: Vec<Camera>,
    env_of_cell: Vec<usize>,
    relit: Vec<Image>,
    camo: Vec<usize>,
}

impl<'a> SceneObjective<'a> {
    pub fn new(scene: &'a Scene, detector: &'a SurrogateDetector, quad: HemisphereQuadrature) -> Result<Self> {
        Self::with_relighter(scene, detector, quad, &ParametricRelighter)
    }

    pub fn with_relighter(
        scene: &'a Scene,
        detector: &'a SurrogateDetector,
        quad: HemisphereQuadrature,
        relighter: &dyn BackgroundRelighter,
    ) -> Result<Self> {
        scene.validate()?;
        let q = scene.space.len();
        let mut cameras = Vec::with_capacity(q);
        let mut env_of_cell = Vec::with_capacity(q);
        for i in 0..q {
            cameras.push(scene.camera_for_cell(i)?.camera);
            let id = &scene.space.config_of(i)?.env_id;
            let e = scene
                .environments
                .iter()
                .position(|e| &e.id == id)
                .ok_or_else(|| Error::UnknownEnvironment(id.clone()))?;
            env_of_cell.push(e);
        }
        let src = scene.reference_environment();
        let relit = scene
            .environments
            .iter()
            .map(|e| relighter.relight(&scene.background, src, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(SceneObjective {
            scene,
            detector,
            quad,
            cameras,
            env_of_cell,
            relit,
            camo: scene.cloud.camo_indices(),
        })
    }

    pub fn initial_params(&self) -> Vec<f64> {
        self.scene.cloud.camo_albedo()
    }

    fn cloud_with(&self, params: &[f64]) -> Result<crate::scene::GaussianCloud> {
        let mut cloud = self.scene.cloud.clone();
        cloud.set_camo_albedo(params)?;
        Ok(cloud)
    }

    fn check_cell(&self, cell: usize) -> Result<()> {
        if cell >= self.cameras.len() {
            return Err(Error::IndexOutOfRange {
                index: cell,
                len: self.cameras.len(),
            });
        }
        Ok(())
    }

    /// Renders and scores one cell.
    pub fn frame(&self, cell: usize, params: &[f64]) -> Result<Frame> {
        self.check_cell(cell)?;
        let cloud = self.cloud_with(params)?;
        let camera = &self.cameras[cell];
        let env = &self.scene.environments[self.env_of_cell[cell]];
        let fg = composite::foreground_with_frozen_regions(&cloud, camera, env, &self.quad)?;
        let image = composite::composite(&fg.output, &self.relit[self.env_of_cell[cell]])?;
        if !image.is_finite() {
            return Err(Error::NonFinite("composited frame".into()));
        }
        let detections = self.detector.detect(&image)?;
        let selection = crate::detector::detection_loss(&detections, &self.scene.ground_truth)?;
        Ok(Frame {
            camera: camera.clone(),
            foreground: fg.output,
            composite: image,
            detections,
            selection,
        })
    }
}

impl CellObjective for SceneObjective<'_> {
    fn num_cells(&self) -> usize {
        self.cameras.len()
    }

    fn num_params(&self) -> usize {
        3 * self.camo.len()
    }

    fn loss_and_grad(&self, cell: usize, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_cell(cell)?;
        let cloud = self.cloud_with(params)?;
        let camera = &self.cameras[cell];
        let env = &self.scene.environments[self.env_of_cell[cell]];
        let fg = composite::foreground_with_frozen_regions(&cloud, camera, env, &self.quad)?;
        let image = composite::composite(&fg.output, &self.relit[self.env_of_cell[cell]])?;
        let (sel, dl_dimage) = self.detector.loss_gradient(&image, &self.scene.ground_truth)?;
        if sel.index.is_none() {
            return Ok((sel.loss, vec![0.0; self.num_params()]));
        }
        let per_prim = fg.albedo_gradient(&cloud, &dl_dimage)?;
        let grad = self.camo.iter().flat_map(|&i| per_prim[i]).collect();
        Ok((sel.loss, grad))
    }

    fn loss(&self, cell: usize, params: &[f64]) -> Result<f64> {
        Ok(self.frame(cell, params)?.selection.loss)
    }
}
