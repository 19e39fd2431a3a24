//! Simulated office demand response with a surprise-minimizing price-setting agent.
//!
//! The crate is organized around the daily control loop: the [`agent`] proposes a
//! [`PriceVector`], the [`env`] maps it to a worker's [`DemandProfile`] and an energy
//! reward, the [`smirl`] buffer scores how familiar that demand is, and [`metrics`]
//! turns the resulting log into sample entropies and learning-speed statistics.
//! [`sampler`] holds the fixed-L1 price sampling and projection helpers.

pub mod agent;
pub mod env;
mod error;
pub mod metrics;
pub mod oracle;
pub mod sampler;
pub mod smirl;

pub use agent::{PolicyParams, PpoConfig, TrainOptions, TrainOutput, Transition};
pub use env::{DemandProfile, EnvConfig, Environment, GridPriceSchedule, PriceVector, WorkerConfig, HOURS};
pub use error::{Error, Result};
pub use metrics::{EntropyTracker, StepRecord};
pub use sampler::{FixedLoadConfig, L1Constraint};
pub use smirl::{AugmentedObservation, SmirlBuffer, SmirlConfig};
