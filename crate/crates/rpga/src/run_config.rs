//! Attack run configuration (JSON). Every key is optional; missing keys take
//! the defaults below.

use std::fs;
use std::path::Path;

use rpga_core::attack::{AttackConfig, OptimizerKind, SamplingMode};
use rpga_core::detector::DetectorSpec;
use rpga_core::hpcm;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Eot,
    Hpcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub seed: u64,
    pub strides: [usize; 3],
    pub scales: Vec<f64>,
    pub threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let d = DetectorSpec::default();
        DetectorConfig {
            seed: d.seed,
            strides: d.strides,
            scales: d.scales,
            threshold: d.threshold,
        }
    }
}

impl DetectorConfig {
    pub fn spec(&self) -> DetectorSpec {
        DetectorSpec {
            seed: self.seed,
            strides: self.strides,
            scales: self.scales.clone(),
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub iters: u64,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    pub tau: f64,
    pub mu: f64,
    pub init_score: f64,
    pub quad_theta: usize,
    pub quad_phi: usize,
    pub optimizer: Optimizer,
    pub detector: DetectorConfig,
    /// Write a checkpoint every this many iterations; 0 writes only the final one.
    pub checkpoint_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Hpcm,
            iters: 2000,
            lr: 0.01,
            batch: 8,
            seed: 0,
            tau: hpcm::DEFAULT_TEMPERATURE,
            mu: hpcm::DEFAULT_MOMENTUM,
            init_score: hpcm::DEFAULT_INIT_SCORE,
            quad_theta: 8,
            quad_phi: 16,
            optimizer: Optimizer::Sgd,
            detector: DetectorConfig::default(),
            checkpoint_every: 500,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_canonical_string(self)
    }

    pub fn attack_config(&self) -> AttackConfig {
        AttackConfig {
            mode: match self.mode {
                Mode::Eot => SamplingMode::Eot,
                Mode::Hpcm => SamplingMode::Hpcm,
            },
            learning_rate: self.lr,
            batch_size: self.batch,
            seed: self.seed,
            tau: self.tau,
            mu: self.mu,
            init_score: self.init_score,
            optimizer: match self.optimizer {
                Optimizer::Sgd => OptimizerKind::Sgd,
                Optimizer::Adam => OptimizerKind::adam(),
            },
        }
    }
}
