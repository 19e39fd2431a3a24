//! Diagonal-Gaussian price policy and state-value function.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::Mlp;
use crate::env::PriceVector;
use crate::smirl::{AugmentedObservation, SmirlBuffer};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Policy mean network, state-independent log-std, and a separate value network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub policy: Mlp,
    pub log_std: Vec<f64>,
    pub value: Mlp,
}

impl PolicyParams {
    pub fn new<R: Rng + ?Sized>(
        obs_width: usize,
        action_dim: usize,
        hidden: usize,
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        let policy = Mlp::new(&[obs_width, hidden, hidden, action_dim], 0.01, rng);
        let value = Mlp::new(&[obs_width, hidden, hidden, 1], 1.0, rng);
        Self {
            policy,
            log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); action_dim],
            value,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            policy: self.policy.zeros_like(),
            log_std: vec![0.0; self.log_std.len()],
            value: self.value.zeros_like(),
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn obs_width(&self) -> usize {
        self.policy.input_width()
    }

    /// Every parameter tensor: policy layers, log-std, value layers.
    pub fn tensors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.policy
            .tensors()
            .chain(std::iter::once(&self.log_std))
            .chain(self.value.tensors())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.policy
            .tensors_mut()
            .chain(std::iter::once(&mut self.log_std))
            .chain(self.value.tensors_mut())
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &PolicyParams, scale: f64) {
        for (dst, src) in self.tensors_mut().zip(other.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
        }
    }

    pub fn clamp_log_std(&mut self) {
        self.log_std
            .iter_mut()
            .for_each(|v| *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().flatten().all(|v| v.is_finite())
    }

    pub fn action_mean(&self, features: &[f64]) -> Vec<f64> {
        self.policy.forward(features)
    }

    /// Deterministic (median) action of the squashed policy.
    pub fn greedy_action(&self, features: &[f64], p_max: f64) -> PriceVector {
        squash(&self.action_mean(features), p_max)
    }
}

/// Log-density of `raw` under `N(mean, diag(exp(log_std))²)`.
pub fn gaussian_logprob(mean: &[f64], log_std: &[f64], raw: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(raw)
        .map(|((m, ls), x)| {
            let z = (x - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

/// `p_max · sigmoid(raw)`, kept strictly inside `(0, p_max)`.
pub fn squash(raw: &[f64], p_max: f64) -> PriceVector {
    PriceVector(
        raw.iter()
            .map(|r| {
                let s = 1.0 / (1.0 + (-r).exp());
                p_max * s.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
            })
            .collect(),
    )
}

/// Inverse of [`squash`] on its range.
pub fn unsquash(prices: &[f64], p_max: f64) -> Vec<f64> {
    prices
        .iter()
        .map(|p| {
            let s = (p / p_max).clamp(f64::EPSILON, 1.0 - f64::EPSILON);
            (s / (1.0 - s)).ln()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub raw_action: Vec<f64>,
    pub action: PriceVector,
    pub logprob: f64,
}

pub fn policy_act<R: Rng + ?Sized>(
    params: &PolicyParams,
    features: &[f64],
    p_max: f64,
    rng: &mut R,
) -> ActionSample {
    let mean = params.action_mean(features);
    let raw_action: Vec<f64> = mean
        .iter()
        .zip(&params.log_std)
        .map(|(m, ls)| {
            let z: f64 = rng.sample(StandardNormal);
            m + ls.exp() * z
        })
        .collect();
    let logprob = gaussian_logprob(&mean, &params.log_std, &raw_action);
    ActionSample {
        action: squash(&raw_action, p_max),
        raw_action,
        logprob,
    }
}

pub fn policy_logprob(params: &PolicyParams, features: &[f64], raw_action: &[f64]) -> f64 {
    gaussian_logprob(&params.action_mean(features), &params.log_std, raw_action)
}

pub fn value(params: &PolicyParams, features: &[f64]) -> f64 {
    params.value.forward(features)[0]
}

/// Maps raw observations to network inputs.
///
/// Demand and the running mean are divided by the baseline daily total, σ by
/// `sigma_init`; the count fraction is already in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationEncoder {
    pub augment: bool,
    pub demand_scale: f64,
    pub sigma_scale: f64,
    pub max_steps: u64,
}

impl ObservationEncoder {
    pub fn width(&self, dim: usize) -> usize {
        if self.augment {
            AugmentedObservation::flattened_len(dim)
        } else {
            dim
        }
    }

    pub fn encode(&self, buffer: &SmirlBuffer, obs: &[f64]) -> Vec<f64> {
        let demand = |v: &[f64]| v.iter().map(|x| x / self.demand_scale).collect::<Vec<_>>();
        if !self.augment {
            return demand(obs);
        }
        let aug = buffer.augment(obs, self.max_steps);
        AugmentedObservation {
            obs: demand(&aug.obs),
            mean: demand(&aug.mean),
            sigma: aug.sigma.iter().map(|s| s / self.sigma_scale).collect(),
            count_normalized: aug.count_normalized,
        }
        .flatten()
    }
}
