//! Loss landscapes over the configuration grid, flatness statistics, the
//! heatmap colormap, and a cheap synthetic attack problem used to compare
//! uniform and difficulty-aware sampling.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::attack::{self, AttackConfig, AttackState, CellObjective, SamplingMode};
use crate::math;
use crate::rng::CounterRng;
use crate::scene::{discretize_space, ConfigurationSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flatness {
    pub mean: f64,
    pub max: f64,
    /// Population variance.
    pub variance: f64,
    pub max_minus_mean: f64,
}

/// One-pass (Welford) statistics over a non-empty loss vector.
pub fn flatness_metrics(losses: &[f64]) -> Result<Flatness> {
    if losses.is_empty() {
        return Err(Error::invalid("losses", "must not be empty"));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut max = f64::NEG_INFINITY;
    for (k, &x) in losses.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite("losses".into()));
        }
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
        max = max.max(x);
    }
    Ok(Flatness {
        mean,
        max,
        variance: (m2 / losses.len() as f64).max(0.0),
        max_minus_mean: max - mean,
    })
}

/// Per-cell losses plus their (azimuth, pitch) reduction, averaged over
/// distance and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub space: ConfigurationSpace,
    pub losses: Vec<f64>,
    /// Row-major `[pitch][azimuth]`.
    reductions: Vec<f64>,
}

impl LandscapeGrid {
    pub fn new(space: ConfigurationSpace, losses: Vec<f64>) -> Result<Self> {
        if losses.len() != space.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} losses for {} cells",
                losses.len(),
                space.len()
            )));
        }
        if !losses.iter().all(|l| l.is_finite()) {
            return Err(Error::NonFinite("landscape losses".into()));
        }
        let (np, na) = (space.pitch_bins.len(), space.azimuth_bins.len());
        let fiber = (space.distance_bins.len() * space.env_ids.len()) as f64;
        let mut reductions = vec![0.0; np * na];
        for (i, l) in losses.iter().enumerate() {
            let c = space.coords_of(i)?;
            reductions[c.pitch * na + c.azimuth] += l;
        }
        reductions.iter_mut().for_each(|r| *r /= fiber);
        Ok(LandscapeGrid {
            space,
            losses,
            reductions,
        })
    }

    /// Mean loss of the `(azimuth, pitch)` fiber.
    pub fn reduction(&self, azimuth: usize, pitch: usize) -> f64 {
        self.reductions[pitch * self.space.azimuth_bins.len() + azimuth]
    }

    pub fn reduction_count(&self) -> usize {
        self.reductions.len()
    }

    pub fn flatness(&self) -> Result<Flatness> {
        flatness_metrics(&self.losses)
    }

    pub fn reduced_range(&self) -> (f64, f64) {
        let lo = self.reductions.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.reductions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Linear blue (low) to red (high) color for `value` within `[lo, hi]`.
/// With a threshold the map is binary: red at or above it, blue below.
pub fn heat_color(value: f64, lo: f64, hi: f64, threshold: Option<f64>) -> [u8; 3] {
    let t = match threshold {
        Some(th) => {
            if value >= th {
                1.0
            } else {
                0.0
            }
        }
        None if hi > lo => ((value - lo) / (hi - lo)).clamp(0.0, 1.0),
        None => 0.0,
    };
    let r = libm::round(255.0 * t) as u8;
    [r, 0, 255 - r]
}

/// Heatmap raster: azimuth along x, pitch along y (highest pitch on top),
/// `block` x `block` pixels per reduced cell. Returns `(width, height, rgb)`.
pub fn heatmap_raster(grid: &LandscapeGrid, block: usize, threshold: Option<f64>) -> (usize, usize, Vec<u8>) {
    let na = grid.space.azimuth_bins.len();
    let np = grid.space.pitch_bins.len();
    let (w, h) = (na * block, np * block);
    let (lo, hi) = grid.reduced_range();
    let mut data = vec![0u8; w * h * 3];
    for y in 0..h {
        let pitch = np - 1 - y / block;
        for x in 0..w {
            let c = heat_color(grid.reduction(x / block, pitch), lo, hi, threshold);
            data[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&c);
        }
    }
    (w, h, data)
}

pub const TOY_AZIMUTHS: usize = 12;
pub const TOY_PITCHES: usize = 10;
pub const TOY_DIM: usize = 16;
pub const TOY_HARD_CELLS: usize = 8;
const TOY_EASY_WEIGHT: f64 = 0.5;
const TOY_EASY_COUPLING: f64 = 0.15;
const TOY_EASY_BIAS: f64 = -1.0;
const TOY_HARD_WEIGHT: f64 = 1.0;
const TOY_HARD_COUPLING: f64 = 0.0;
const TOY_HARD_BIAS: f64 = 1.5;
const TOY_NOISE: f64 = 0.3;

/// Synthetic per-cell loss `sigmoid(w_i . a + b_i)` over a 16-dim parameter
/// in `[0, 1]^16`, on a 12 x 10 azimuth x pitch grid.
///
/// Easy cells load on a shared direction and weakly oppose a second
/// direction on which the eight hard cells (elevated bias) load strongly.
/// Descending on the cell average therefore drifts against the hard cells,
/// while a worst-case-aware objective can trade a little average loss for a
/// much lower peak.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyProblem {
    pub weights: Vec<[f64; TOY_DIM]>,
    pub biases: Vec<f64>,
    /// Cell indices of the hard cells, ascending.
    pub hard: Vec<usize>,
}

pub fn toy_problem(seed: u64) -> ToyProblem {
    let mut rng = CounterRng::new(seed ^ 0x746f_795f_7072_6f62);
    let q = TOY_AZIMUTHS * TOY_PITCHES;
    let mut sign_vec = || {
        let mut v = [0.0; TOY_DIM];
        for x in &mut v {
            *x = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        }
        v
    };
    let easy_dir = sign_vec();
    let hard_dir = sign_vec();
    let mut hard: Vec<usize> = Vec::with_capacity(TOY_HARD_CELLS);
    while hard.len() < TOY_HARD_CELLS {
        let c = (rng.next_u64() % q as u64) as usize;
        if !hard.contains(&c) {
            hard.push(c);
        }
    }
    hard.sort_unstable();
    let mut weights = Vec::with_capacity(q);
    let mut biases = Vec::with_capacity(q);
    for i in 0..q {
        let (a, b, bias) = if hard.contains(&i) {
            (TOY_HARD_COUPLING, TOY_HARD_WEIGHT, TOY_HARD_BIAS)
        } else {
            (TOY_EASY_WEIGHT, -TOY_EASY_COUPLING, TOY_EASY_BIAS)
        };
        let mut w = [0.0; TOY_DIM];
        for k in 0..TOY_DIM {
            w[k] = a * easy_dir[k] + b * hard_dir[k] + TOY_NOISE * rng.normal();
        }
        weights.push(w);
        biases.push(bias + 0.2 * rng.normal());
    }
    ToyProblem { weights, biases, hard }
}

impl ToyProblem {
    pub fn space(&self) -> ConfigurationSpace {
        let pitch: Vec<f64> = (0..TOY_PITCHES).map(|i| 5.0 + 9.0 * i as f64).collect();
        let az: Vec<f64> = (0..TOY_AZIMUTHS).map(|i| 30.0 * i as f64).collect();
        discretize_space(&pitch, &az, &[10.0], &["toy".to_string()]).expect("static grid is valid")
    }

    fn logit(&self, cell: usize, a: &[f64]) -> f64 {
        self.weights[cell].iter().zip(a).map(|(w, x)| w * x).sum::<f64>() + self.biases[cell]
    }

    /// All cell losses at `a`.
    pub fn losses(&self, a: &[f64]) -> Vec<f64> {
        (0..self.weights.len()).map(|i| math::sigmoid(self.logit(i, a))).collect()
    }

    /// Closed-form `dL_i / da`.
    pub fn gradient(&self, cell: usize, a: &[f64]) -> Vec<f64> {
        let l = math::sigmoid(self.logit(cell, a));
        let s = l * (1.0 - l);
        self.weights[cell].iter().map(|w| s * w).collect()
    }
}

impl CellObjective for ToyProblem {
    fn num_cells(&self) -> usize {
        self.weights.len()
    }

    fn num_params(&self) -> usize {
        TOY_DIM
    }

    fn loss_and_grad(&self, cell: usize, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        if cell >= self.weights.len() {
            return Err(Error::IndexOutOfRange {
                index: cell,
                len: self.weights.len(),
            });
        }
        if params.len() != TOY_DIM {
            return Err(Error::DimensionMismatch("toy problem has 16 parameters".into()));
        }
        Ok((math::sigmoid(self.logit(cell, params)), self.gradient(cell, params)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyComparison {
    pub eot: Flatness,
    pub hpcm: Flatness,
}

impl ToyComparison {
    pub fn hpcm_flatter(&self) -> bool {
        self.hpcm.max < self.eot.max && self.hpcm.max_minus_mean < self.eot.max_minus_mean
    }
}

/// Runs uniform and difficulty-aware sampling from the same start with
/// identical settings and reports the final full-grid statistics of each.
pub fn compare_on_toy(seed: u64, iters: u64, config: &AttackConfig) -> Result<ToyComparison> {
    let toy = toy_problem(seed);
    let start = vec![0.5; TOY_DIM];
    let mut finals = [Flatness {
        mean: 0.0,
        max: 0.0,
        variance: 0.0,
        max_minus_mean: 0.0,
    }; 2];
    for (k, mode) in [SamplingMode::Eot, SamplingMode::Hpcm].into_iter().enumerate() {
        let cfg = AttackConfig {
            mode,
            seed,
            ..config.clone()
        };
        let mut state = AttackState::new(&start, toy.num_cells(), cfg)?;
        for _ in 0..iters {
            attack::attack_step(&mut state, &toy)?;
        }
        finals[k] = flatness_metrics(&toy.losses(&state.params))?;
    }
    Ok(ToyComparison {
        eot: finals[0],
        hpcm: finals[1],
    })
}
