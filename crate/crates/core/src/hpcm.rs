//! Hard physical configuration mining: a momentum-smoothed difficulty score
//! per configuration cell, softmax sampling over those scores, and the
//! log-sum-exp objective that this sampling implicitly minimizes.
//!
//! Sampling with probabilities `softmax(L / tau)` and averaging per-cell
//! gradients gives exactly the gradient of `tau * log sum exp(L / tau)`, a
//! smooth upper bound on the worst-case loss with
//! `max L <= LSE <= max L + tau * log M`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::CounterRng;
use crate::{Error, Result};

pub const DEFAULT_INIT_SCORE: f64 = 10.0;
pub const DEFAULT_MOMENTUM: f64 = 0.5;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDifficultyTable {
    pub scores: Vec<f64>,
    pub mu: f64,
    pub tau: f64,
    pub init_value: f64,
}

fn check_mu_tau(mu: f64, tau: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::invalid("mu", "momentum must lie in [0, 1)"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", "temperature must be > 0"));
    }
    Ok(())
}

/// Table of `q` cells, every score set to `init_value`.
pub fn init_table(q: usize, init_value: f64, mu: f64, tau: f64) -> Result<GlobalDifficultyTable> {
    if q == 0 {
        return Err(Error::invalid("q", "table needs at least one cell"));
    }
    if !init_value.is_finite() {
        return Err(Error::NonFinite("init_value".into()));
    }
    check_mu_tau(mu, tau)?;
    Ok(GlobalDifficultyTable {
        scores: vec![init_value; q],
        mu,
        tau,
        init_value,
    })
}

impl GlobalDifficultyTable {
    pub fn with_defaults(q: usize) -> Result<Self> {
        init_table(q, DEFAULT_INIT_SCORE, DEFAULT_MOMENTUM, DEFAULT_TEMPERATURE)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `s_i <- mu * s_i + (1 - mu) * loss`; no other entry changes.
    pub fn update_score(&mut self, i: usize, loss: f64) -> Result<()> {
        if i >= self.scores.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.scores.len(),
            });
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        self.scores[i] = self.mu * self.scores[i] + (1.0 - self.mu) * loss;
        Ok(())
    }

    pub fn sampling_probs(&self) -> Vec<f64> {
        softmax(&self.scores, self.tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(Error::invalid("table", "no cells"));
        }
        if !self.scores.iter().all(|s| s.is_finite()) {
            return Err(Error::NonFinite("table scores".into()));
        }
        check_mu_tau(self.mu, self.tau)
    }
}

/// Max-shifted softmax of `values / tau`.
pub fn softmax(values: &[f64], tau: f64) -> Vec<f64> {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = values.iter().map(|v| math::exp((v - m) / tau)).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Inverse-CDF draw from `probs`.
pub fn sample_index(probs: &[f64], rng: &mut CounterRng) -> usize {
    let u = rng.next_f64();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    // Rounding left the cumulative sum just below one.
    last_positive
}

/// Draws one cell with difficulty-aware probabilities, advancing `rng`.
pub fn sample_config(table: &GlobalDifficultyTable, rng: &mut CounterRng) -> usize {
    sample_index(&table.sampling_probs(), rng)
}

/// `tau * log sum exp(L_i / tau)`, max-shifted.
pub fn lse_objective(losses: &[f64], tau: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::invalid("losses", "must not be empty"));
    }
    if !losses.iter().all(|l| l.is_finite()) {
        return Err(Error::NonFinite("losses".into()));
    }
    let m = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = losses.iter().map(|l| math::exp((l - m) / tau)).sum();
    Ok(m + tau * math::ln(z))
}

/// Softmax weights `d LSE / d L_i`; identical to the table's sampling
/// probabilities when scores equal the losses.
pub fn lse_gradient_weights(losses: &[f64], tau: f64) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(Error::invalid("losses", "must not be empty"));
    }
    Ok(softmax(losses, tau))
}

/// Gradient of the LSE objective with respect to shared parameters, given
/// per-cell parameter gradients: `sum_i softmax_i * grad_i`.
pub fn lse_parameter_gradient(losses: &[f64], grads: &[Vec<f64>], tau: f64) -> Result<Vec<f64>> {
    if grads.len() != losses.len() {
        return Err(Error::DimensionMismatch("one gradient per loss is required".into()));
    }
    let w = lse_gradient_weights(losses, tau)?;
    let dim = grads.first().map_or(0, |g| g.len());
    let mut out = vec![0.0; dim];
    for (wi, g) in w.iter().zip(grads) {
        if g.len() != dim {
            return Err(Error::DimensionMismatch("gradient lengths differ".into()));
        }
        for (o, gi) in out.iter_mut().zip(g) {
            *o += wi * gi;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseBounds {
    pub max: f64,
    pub lse: f64,
    /// `max + tau * log M`.
    pub upper: f64,
}

/// Evaluates `max <= LSE <= max + tau log M`, failing if the sandwich is
/// violated by more than `1e-9`.
pub fn check_bounds(losses: &[f64], tau: f64) -> Result<LseBounds> {
    let lse = lse_objective(losses, tau)?;
    let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let upper = max + tau * math::ln(losses.len() as f64);
    if lse < max - 1e-9 || lse > upper + 1e-9 {
        return Err(Error::invalid(
            "losses",
            alloc::format!("LSE {lse} outside [{max}, {upper}]"),
        ));
    }
    Ok(LseBounds { max, lse, upper })
}
