//! Clipped-surrogate PPO with plain SGD.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gae::{compute_gae, normalize_advantages, Transition};
use super::policy::PolicyParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub learning_rate: f64,
    /// Days collected between updates.
    pub batch_size: usize,
    pub minibatch_size: usize,
    pub clip: f64,
    pub epochs_per_batch: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    /// Width of both hidden layers in the policy and value trunks.
    pub hidden: usize,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            batch_size: 256,
            minibatch_size: 32,
            clip: 0.3,
            epochs_per_batch: 8,
            gamma: 0.99,
            gae_lambda: 0.95,
            value_coeff: 0.5,
            entropy_coeff: 0.0,
            hidden: 64,
            init_log_std: 0.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |key, reason: &str| {
            Err(Error::Config {
                key,
                reason: reason.into(),
            })
        };
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return err("learning_rate", "must be finite and >= 0");
        }
        if self.batch_size == 0 {
            return err("batch_size", "must be positive");
        }
        if self.minibatch_size == 0 || self.minibatch_size > self.batch_size {
            return err("minibatch_size", "must satisfy 0 < minibatch_size <= batch_size");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return err("clip", "must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return err("gamma", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return err("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.value_coeff.is_finite() && self.value_coeff >= 0.0) {
            return err("value_coeff", "must be finite and >= 0");
        }
        if !(self.entropy_coeff.is_finite() && self.entropy_coeff >= 0.0) {
            return err("entropy_coeff", "must be finite and >= 0");
        }
        if self.hidden == 0 {
            return err("hidden", "must be positive");
        }
        if !self.init_log_std.is_finite() {
            return err("init_log_std", "must be finite");
        }
        Ok(())
    }
}

/// A full rollout ready for optimization: transitions with normalized
/// advantages and value targets.
#[derive(Debug, Clone)]
pub struct Batch {
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn new(transitions: Vec<Transition>, last_value: f64, cfg: &PpoConfig) -> Result<Self> {
        let (mut advantages, returns) = compute_gae(&transitions, last_value, cfg.gamma, cfg.gae_lambda)?;
        normalize_advantages(&mut advantages);
        Ok(Self {
            transitions,
            advantages,
            returns,
        })
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    fn sample(&self, i: usize) -> Sample<'_> {
        let t = &self.transitions[i];
        Sample {
            obs: &t.obs,
            raw_action: &t.raw_action,
            old_logprob: t.logprob,
            advantage: self.advantages[i],
            ret: self.returns[i],
        }
    }
}

/// Everything the loss needs about one transition.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub obs: &'a [f64],
    pub raw_action: &'a [f64],
    pub old_logprob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    /// Fraction of samples whose clipped branch was active.
    pub clip_fraction: f64,
}

/// Minibatch loss
/// `−mean(min(ρA, clip(ρ, 1−ε, 1+ε)A)) + c_v·mean((V − R)²) − c_e·H`,
/// with its gradient accumulated into `grads` when given.
pub fn ppo_loss(
    params: &PolicyParams,
    samples: &[Sample<'_>],
    cfg: &PpoConfig,
    mut grads: Option<&mut PolicyParams>,
) -> LossStats {
    let m = samples.len() as f64;
    let (lo, hi) = (1.0 - cfg.clip, 1.0 + cfg.clip);
    let inv_var: Vec<f64> = params.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    let mut stats = LossStats::default();
    let mut clipped = 0usize;

    for s in samples {
        let trace = params.policy.forward_traced(s.obs);
        let mean = trace.output();
        let logprob = super::policy::gaussian_logprob(mean, &params.log_std, s.raw_action);
        let ratio = (logprob - s.old_logprob).exp();
        let unclipped = ratio * s.advantage;
        let clipped_obj = ratio.clamp(lo, hi) * s.advantage;
        // Ties (ratio inside the band) take the unclipped branch.
        let use_unclipped = unclipped <= clipped_obj;
        stats.policy_loss -= unclipped.min(clipped_obj) / m;
        if !use_unclipped {
            clipped += 1;
        }

        let vtrace = params.value.forward_traced(s.obs);
        let v = vtrace.output()[0];
        stats.value_loss += (v - s.ret).powi(2) / m;

        if let Some(g) = grads.as_deref_mut() {
            if use_unclipped {
                let dlogp = -ratio * s.advantage / m;
                let dmean: Vec<f64> = mean
                    .iter()
                    .zip(s.raw_action)
                    .zip(&inv_var)
                    .map(|((mu, x), iv)| dlogp * (x - mu) * iv)
                    .collect();
                params.policy.backward(&trace, &dmean, &mut g.policy);
                for (((gl, mu), x), iv) in g.log_std.iter_mut().zip(mean).zip(s.raw_action).zip(&inv_var) {
                    *gl += dlogp * ((x - mu).powi(2) * iv - 1.0);
                }
            }
            let dv = 2.0 * cfg.value_coeff * (v - s.ret) / m;
            params.value.backward(&vtrace, &[dv], &mut g.value);
        }
    }

    let half_log_2pi_e = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    stats.entropy = params.log_std.iter().map(|ls| ls + half_log_2pi_e).sum();
    if let Some(g) = grads {
        g.log_std.iter_mut().for_each(|gl| *gl -= cfg.entropy_coeff);
    }
    stats.total = stats.policy_loss + cfg.value_coeff * stats.value_loss - cfg.entropy_coeff * stats.entropy;
    stats.clip_fraction = clipped as f64 / m;
    stats
}

/// Epochs of shuffled minibatch SGD over one batch. Returns the mean loss
/// statistics over all minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    batch: &Batch,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<LossStats> {
    if batch.len() != cfg.batch_size {
        return Err(Error::BatchSize {
            expected: cfg.batch_size,
            actual: batch.len(),
        });
    }
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut mean_stats = LossStats::default();
    let mut steps = 0usize;
    let mut grads = params.zeros_like();

    for epoch in 0..cfg.epochs_per_batch {
        order.shuffle(rng);
        for (mb, idx) in order.chunks(cfg.minibatch_size).enumerate() {
            let samples: Vec<Sample<'_>> = idx.iter().map(|&i| batch.sample(i)).collect();
            grads
                .tensors_mut()
                .for_each(|t| t.iter_mut().for_each(|v| *v = 0.0));
            let stats = ppo_loss(params, &samples, cfg, Some(&mut grads));
            if !stats.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    minibatch: mb,
                    policy: stats.policy_loss,
                    value: stats.value_loss,
                });
            }
            params.add_scaled(&grads, -cfg.learning_rate);
            params.clamp_log_std();

            steps += 1;
            mean_stats.policy_loss += stats.policy_loss;
            mean_stats.value_loss += stats.value_loss;
            mean_stats.entropy += stats.entropy;
            mean_stats.total += stats.total;
            mean_stats.clip_fraction += stats.clip_fraction;
        }
    }
    if steps > 0 {
        let k = steps as f64;
        mean_stats.policy_loss /= k;
        mean_stats.value_loss /= k;
        mean_stats.entropy /= k;
        mean_stats.total /= k;
        mean_stats.clip_fraction /= k;
    }
    Ok(mean_stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::policy::{policy_act, value};
    use crate::env::PriceVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_batch(seed: u64, n: usize) -> (PolicyParams, Batch) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = PolicyParams::new(5, 3, 8, -0.3, &mut rng);
        let transitions = (0..n)
            .map(|i| {
                let obs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let s = policy_act(&params, &obs, 1.0, &mut rng);
                Transition {
                    value: value(&params, &obs),
                    obs,
                    raw_action: s.raw_action,
                    action: s.action,
                    logprob: s.logprob,
                    r_combined: rng.gen_range(-1.0..1.0),
                    r_energy: 0.0,
                    r_smirl: 0.0,
                    done: i % 4 == 3,
                }
            })
            .collect();
        let cfg = PpoConfig {
            batch_size: n,
            minibatch_size: 4,
            ..Default::default()
        };
        let batch = Batch::new(transitions, 0.0, &cfg).unwrap();
        (params, batch)
    }

    #[test]
    fn identical_params_give_unit_ratio() {
        let (params, batch) = small_batch(1, 8);
        let samples: Vec<_> = (0..8).map(|i| batch.sample(i)).collect();
        let cfg = PpoConfig::default();
        let stats = ppo_loss(&params, &samples, &cfg, None);
        // With ρ = 1 both surrogates equal A, so the policy loss is −mean(A).
        let mean_adv = batch.advantages.iter().sum::<f64>() / 8.0;
        assert!((stats.policy_loss + mean_adv).abs() < 1e-12);
        assert_eq!(stats.clip_fraction, 0.0);
    }

    #[test]
    fn clipped_positive_advantage_has_no_policy_gradient() {
        let (params, batch) = small_batch(2, 8);
        let mut s = batch.sample(0);
        s.advantage = 1.0;
        // Pretend the behavior policy made this action far less likely: ρ ≫ 1 + ε.
        s.old_logprob -= 2.0;
        let cfg = PpoConfig {
            value_coeff: 0.0,
            ..Default::default()
        };
        let mut g = params.zeros_like();
        let stats = ppo_loss(&params, &[s], &cfg, Some(&mut g));
        assert_eq!(stats.clip_fraction, 1.0);
        assert!(g.tensors().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_learning_rate_is_inert() {
        let (params, batch) = small_batch(3, 16);
        let cfg = PpoConfig {
            learning_rate: 0.0,
            batch_size: 16,
            minibatch_size: 4,
            epochs_per_batch: 1,
            ..Default::default()
        };
        let mut updated = params.clone();
        ppo_update(&mut updated, &batch, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(updated, params);
    }

    #[test]
    fn wrong_batch_size_rejected() {
        let (mut params, batch) = small_batch(4, 8);
        let cfg = PpoConfig::default();
        assert_eq!(
            ppo_update(&mut params, &batch, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err(),
            Error::BatchSize {
                expected: 256,
                actual: 8
            }
        );
    }

    #[test]
    fn non_finite_loss_aborts() {
        let (mut params, mut batch) = small_batch(5, 8);
        batch.returns[0] = f64::INFINITY;
        let cfg = PpoConfig {
            batch_size: 8,
            minibatch_size: 8,
            ..Default::default()
        };
        let err = ppo_update(&mut params, &batch, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(err, Err(Error::NonFiniteLoss { epoch: 0, .. })));
    }

    #[test]
    fn config_invariants() {
        let bad = PpoConfig {
            clip: 1.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { key: "clip", .. })));
        let bad = PpoConfig {
            minibatch_size: 512,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::Config {
                key: "minibatch_size",
                ..
            })
        ));
        assert!(PpoConfig::default().validate().is_ok());
    }

    #[test]
    fn update_moves_mean_towards_advantaged_action() {
        // One state, one action dimension: reward the upper half of the Gaussian.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut params = PolicyParams::new(1, 1, 8, 0.0, &mut rng);
        let obs = vec![1.0];
        let before = params.action_mean(&obs)[0];
        let transitions: Vec<_> = (0..64)
            .map(|_| {
                let s = policy_act(&params, &obs, 1.0, &mut rng);
                Transition {
                    obs: obs.clone(),
                    r_combined: s.raw_action[0] - before,
                    raw_action: s.raw_action,
                    action: PriceVector(s.action.0),
                    logprob: s.logprob,
                    value: 0.0,
                    r_energy: 0.0,
                    r_smirl: 0.0,
                    done: true,
                }
            })
            .collect();
        let cfg = PpoConfig {
            batch_size: 64,
            minibatch_size: 16,
            learning_rate: 0.01,
            ..Default::default()
        };
        let batch = Batch::new(transitions, 0.0, &cfg).unwrap();
        ppo_update(&mut params, &batch, &cfg, &mut rng).unwrap();
        assert!(params.action_mean(&obs)[0] > before);
    }
}
