//! From-scratch PPO agent: networks, policy, advantage estimation, updates and
//! the training loop.

pub mod gae;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod train;

pub use gae::{compute_gae, normalize_advantages, Transition};
pub use policy::{policy_act, policy_logprob, value, ActionSample, ObservationEncoder, PolicyParams};
pub use ppo::{ppo_loss, ppo_update, Batch, LossStats, PpoConfig, Sample};
pub use train::{train, train_collect, ToyBandit, TrainObserver, TrainOptions, TrainOutput};
