//! The daily control loop: act, observe, score surprise, learn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gae::Transition;
use super::policy::{
    policy_act, policy_logprob, unsquash, value, ActionSample, ObservationEncoder, PolicyParams,
};
use super::ppo::{ppo_update, Batch, LossStats, PpoConfig};
use crate::env::{DayEnvironment, DemandProfile, PriceVector, StepOutcome};
use crate::metrics::{EntropyTracker, StepRecord};
use crate::sampler::{project_to_l1, sample_fixed_l1, L1Constraint};
use crate::smirl::{combined_reward, SmirlBuffer, SmirlConfig};
use crate::Result;

// Independent ChaCha streams derived from the run seed.
const STREAM_INIT: u64 = 1;
const STREAM_ACT: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_SAMPLER: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub max_steps: u64,
    pub seed: u64,
    /// Trailing window for the logged sample entropy.
    pub entropy_window: usize,
    /// Maintain the surprise buffer and log `r_smirl` even when α = 0.
    pub track_smirl: bool,
    pub constraint: L1Constraint,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_steps: 20_000,
            seed: 0,
            entropy_window: EntropyTracker::DEFAULT_WINDOW,
            track_smirl: true,
            constraint: L1Constraint::Off,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub buffer: SmirlBuffer,
    pub updates: Vec<LossStats>,
    pub encoder: ObservationEncoder,
}

/// Receives the per-day log and, optionally, every parameter update.
pub trait TrainObserver {
    fn on_step(&mut self, record: &StepRecord) -> Result<()>;

    /// Called after each PPO update; `step` is the number of days collected so far.
    fn on_update(&mut self, _step: u64, _params: &PolicyParams, _stats: &LossStats) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&StepRecord) -> Result<()>> TrainObserver for F {
    fn on_step(&mut self, record: &StepRecord) -> Result<()> {
        self(record)
    }
}

/// Runs `opts.max_steps` days, emitting one [`StepRecord`] per day to `observer`.
///
/// α > 0 trains on the combined reward; α = 0 trains on the energy reward alone
/// (the baseline). The buffer is maintained whenever the observation is
/// augmented, α > 0, or `opts.track_smirl` asks for `r_smirl` to be logged.
pub fn train<E, O>(
    env: &mut E,
    smirl_cfg: &SmirlConfig,
    ppo_cfg: &PpoConfig,
    opts: &TrainOptions,
    mut observer: O,
) -> Result<TrainOutput>
where
    E: DayEnvironment,
    O: TrainObserver,
{
    smirl_cfg.validate()?;
    ppo_cfg.validate()?;
    let dim = env.dim();
    let p_max = env.p_max();
    let augment = smirl_cfg.augment;
    let track = augment || smirl_cfg.alpha > 0.0 || opts.track_smirl;
    let encoder = ObservationEncoder {
        augment,
        demand_scale: env.demand_scale(),
        sigma_scale: smirl_cfg.sigma_init,
        max_steps: opts.max_steps,
    };

    let mut init_rng = stream(opts.seed, STREAM_INIT);
    let mut act_rng = stream(opts.seed, STREAM_ACT);
    let mut shuffle_rng = stream(opts.seed, STREAM_SHUFFLE);
    let mut sampler_rng = stream(opts.seed, STREAM_SAMPLER);

    let mut params = PolicyParams::new(
        encoder.width(dim),
        dim,
        ppo_cfg.hidden,
        ppo_cfg.init_log_std,
        &mut init_rng,
    );
    let mut buffer = SmirlBuffer::new(dim, smirl_cfg);
    let mut tracker = EntropyTracker::new(opts.entropy_window);
    let mut updates = Vec::new();
    let mut transitions = Vec::with_capacity(ppo_cfg.batch_size);

    if opts.max_steps == 0 {
        return Ok(TrainOutput {
            params,
            buffer,
            updates,
            encoder,
        });
    }

    let mut obs: DemandProfile = env.reset();
    if track {
        buffer.update(&obs)?;
    }
    let mut features = encoder.encode(&buffer, &obs);

    for step in 0..opts.max_steps {
        let sample = choose_action(
            &params,
            &features,
            p_max,
            dim,
            opts.constraint,
            step < ppo_cfg.batch_size as u64,
            &mut act_rng,
            &mut sampler_rng,
        )?;
        let v = value(&params, &features);
        let StepOutcome {
            obs: next_obs,
            reward: r_energy,
            done,
        } = env.step(&sample.action)?;

        // Score against p_θ(t−1) before the new day enters the estimate.
        let r_smirl = if track {
            let r = buffer.reward(&next_obs)?;
            buffer.update(&next_obs)?;
            r
        } else {
            0.0
        };
        let r_combined = if smirl_cfg.alpha > 0.0 {
            combined_reward(r_energy, r_smirl, smirl_cfg)
        } else {
            r_energy
        };

        tracker.push(&next_obs);
        observer.on_step(&StepRecord {
            step,
            seed: opts.seed,
            alpha: smirl_cfg.alpha,
            r_energy,
            r_smirl,
            r_combined,
            sample_entropy: tracker.sample_entropy().unwrap_or(f64::NAN),
            prices: sample.action.0.clone(),
            demand: next_obs.0.clone(),
        })?;

        transitions.push(Transition {
            obs: std::mem::take(&mut features),
            raw_action: sample.raw_action,
            action: sample.action,
            logprob: sample.logprob,
            value: v,
            r_combined,
            r_energy,
            r_smirl,
            done,
        });

        obs = if done { env.reset() } else { next_obs };
        features = encoder.encode(&buffer, &obs);

        if transitions.len() == ppo_cfg.batch_size {
            let last_value = value(&params, &features);
            let batch = Batch::new(std::mem::take(&mut transitions), last_value, ppo_cfg)?;
            let stats = ppo_update(&mut params, &batch, ppo_cfg, &mut shuffle_rng)?;
            observer.on_update(step + 1, &params, &stats)?;
            updates.push(stats);
            transitions = Vec::with_capacity(ppo_cfg.batch_size);
        }
    }

    Ok(TrainOutput {
        params,
        buffer,
        updates,
        encoder,
    })
}

#[allow(clippy::too_many_arguments)]
fn choose_action(
    params: &PolicyParams,
    features: &[f64],
    p_max: f64,
    dim: usize,
    constraint: L1Constraint,
    first_batch: bool,
    act_rng: &mut ChaCha8Rng,
    sampler_rng: &mut ChaCha8Rng,
) -> Result<ActionSample> {
    match constraint {
        L1Constraint::Sample { target } if first_batch => {
            // Warm-up days come from the simplex; the learner sees them as if the
            // current policy had produced the matching pre-squash action.
            let action = sample_fixed_l1(dim, target, sampler_rng);
            let raw_action = unsquash(&action, p_max);
            let logprob = policy_logprob(params, features, &raw_action);
            Ok(ActionSample {
                raw_action,
                action,
                logprob,
            })
        }
        L1Constraint::Project { target } => {
            let mut s = policy_act(params, features, p_max, act_rng);
            s.action = project_to_l1(&s.action, target)?;
            Ok(s)
        }
        _ => Ok(policy_act(params, features, p_max, act_rng)),
    }
}

/// Single-step bandit with reward `−‖a − a*‖²`, used to sanity-check the optimizer.
#[derive(Debug, Clone)]
pub struct ToyBandit {
    pub target: Vec<f64>,
    pub p_max: f64,
}

impl DayEnvironment for ToyBandit {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn p_max(&self) -> f64 {
        self.p_max
    }

    fn demand_scale(&self) -> f64 {
        1.0
    }

    fn reset(&mut self) -> DemandProfile {
        DemandProfile(vec![0.0; self.target.len()])
    }

    fn step(&mut self, action: &PriceVector) -> Result<StepOutcome> {
        action.validate(self.target.len(), self.p_max)?;
        let reward = -action
            .iter()
            .zip(&self.target)
            .map(|(a, t)| (a - t).powi(2))
            .sum::<f64>();
        Ok(StepOutcome {
            obs: self.reset(),
            reward,
            done: true,
        })
    }
}

/// Convenience for callers that only need the log in memory.
pub fn train_collect<E: DayEnvironment>(
    env: &mut E,
    smirl_cfg: &SmirlConfig,
    ppo_cfg: &PpoConfig,
    opts: &TrainOptions,
) -> Result<(TrainOutput, Vec<StepRecord>)> {
    let mut records = Vec::with_capacity(opts.max_steps as usize);
    let out = train(env, smirl_cfg, ppo_cfg, opts, |r: &StepRecord| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok((out, records))
}
