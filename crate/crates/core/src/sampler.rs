//! Fixed-L1-norm price vectors.
//!
//! Under a constant hourly load `c` the day's total price is `c·‖p‖₁`, so holding
//! the L1 norm fixed keeps the controller from simply inflating or deflating
//! every price at once.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::env::PriceVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedLoadConfig {
    /// Constant load per hour, kWh.
    pub load_magnitude: f64,
    /// Target ‖p‖₁.
    pub norm_target: f64,
}

impl FixedLoadConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("sampler.load_magnitude", self.load_magnitude),
            ("sampler.norm_target", self.norm_target),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config {
                    key,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// How agent actions are tied to the L1 sphere of radius `target`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum L1Constraint {
    #[default]
    Off,
    /// Rescale every emitted price vector onto the sphere.
    Project { target: f64 },
    /// Draw the first batch of days uniformly from the sphere instead of the policy.
    Sample { target: f64 },
}

/// Uniform draw from `{p ≥ 0 : Σp = total}` by normalizing exponential variates.
pub fn sample_fixed_l1<R: Rng + ?Sized>(dim: usize, total: f64, rng: &mut R) -> PriceVector {
    loop {
        let e: Vec<f64> = (0..dim).map(|_| rng.sample(Exp1)).collect();
        let sum: f64 = e.iter().sum();
        if sum > 0.0 {
            return PriceVector(e.into_iter().map(|x| total * x / sum).collect());
        }
    }
}

pub fn project_to_l1(p: &PriceVector, total: f64) -> Result<PriceVector> {
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(PriceVector(p.iter().map(|x| total * x / sum).collect()))
}

/// Total price of a day at constant load: `c · Σ p_i`.
pub fn fixed_price_day(p: &PriceVector, cfg: &FixedLoadConfig) -> f64 {
    cfg.load_magnitude * p.iter().sum::<f64>()
}
