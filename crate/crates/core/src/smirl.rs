//! Surprise-minimizing auxiliary reward.
//!
//! [`SmirlBuffer`] keeps a streaming independent-Gaussian estimate of every
//! demand profile the agent has seen. A new day is rewarded by how likely it is
//! under that estimate, before the day itself is folded in.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmirlConfig {
    /// Weight of the surprise term in the combined reward. Zero is plain PPO.
    pub alpha: f64,
    pub sigma_floor: f64,
    /// σ reported while fewer than two observations have been seen.
    pub sigma_init: f64,
    /// Feed (μ, σ, n) to the policy alongside the demand. Independent of α so
    /// that α = 0 and α > 0 runs share one observation space.
    pub augment: bool,
}

impl Default for SmirlConfig {
    fn default() -> Self {
        Self {
            alpha: 0.12,
            sigma_floor: 0.01,
            sigma_init: 1.0,
            augment: true,
        }
    }
}

impl SmirlConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |key, reason: &str| {
            Err(Error::Config {
                key,
                reason: reason.into(),
            })
        };
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return err("alpha", "must be finite and >= 0");
        }
        if !(self.sigma_floor.is_finite() && self.sigma_floor > 0.0) {
            return err("sigma_floor", "must be finite and > 0");
        }
        if !(self.sigma_init.is_finite() && self.sigma_init > 0.0) {
            return err("sigma_init", "must be finite and > 0");
        }
        Ok(())
    }
}

/// Running per-dimension mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmirlBuffer {
    dim: usize,
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    sigma_floor: f64,
    sigma_init: f64,
}

impl SmirlBuffer {
    pub fn new(dim: usize, cfg: &SmirlConfig) -> Self {
        Self {
            dim,
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            sigma_floor: cfg.sigma_floor,
            sigma_init: cfg.sigma_init,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    pub fn sigma(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![self.sigma_init; self.dim];
        }
        let denom = (self.count - 1) as f64;
        self.m2
            .iter()
            .map(|m2| (m2 / denom).sqrt().max(self.sigma_floor))
            .collect()
    }

    fn check_dim(&self, obs: &[f64]) -> Result<()> {
        if obs.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: obs.len(),
            })
        }
    }

    pub fn update(&mut self, obs: &[f64]) -> Result<()> {
        self.check_dim(obs)?;
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), x) in self.mean.iter_mut().zip(&mut self.m2).zip(obs) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
        Ok(())
    }

    /// `−Σ_i (ln σ_i + (s_i − μ_i)² / 2σ_i²)` under the current estimate.
    ///
    /// Call before [`update`](Self::update) with the same observation.
    pub fn reward(&self, obs: &[f64]) -> Result<f64> {
        self.check_dim(obs)?;
        if self.count == 0 {
            return Err(Error::EmptyBuffer);
        }
        let sigma = self.sigma();
        Ok(-obs
            .iter()
            .zip(&self.mean)
            .zip(&sigma)
            .map(|((s, mu), sd)| sd.ln() + (s - mu).powi(2) / (2.0 * sd * sd))
            .sum::<f64>())
    }

    /// Observation extended with the sufficient statistics of the estimate.
    pub fn augment(&self, obs: &[f64], max_steps: u64) -> AugmentedObservation {
        AugmentedObservation {
            obs: obs.to_vec(),
            mean: self.mean.clone(),
            sigma: self.sigma(),
            count_normalized: self.count as f64 / max_steps.max(1) as f64,
        }
    }
}

/// Demand plus (μ, σ, n / max_steps) of the state marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedObservation {
    pub obs: Vec<f64>,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    pub count_normalized: f64,
}

impl AugmentedObservation {
    pub fn flattened_len(dim: usize) -> usize {
        3 * dim + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::flattened_len(self.obs.len()));
        v.extend_from_slice(&self.obs);
        v.extend_from_slice(&self.mean);
        v.extend_from_slice(&self.sigma);
        v.push(self.count_normalized);
        v
    }
}

pub fn combined_reward(r_energy: f64, r_smirl: f64, cfg: &SmirlConfig) -> f64 {
    r_energy + cfg.alpha * r_smirl
}
