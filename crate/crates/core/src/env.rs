//! Office demand-response environment.
//!
//! One step is one working day of [`HOURS`] controlled hours. The agent posts a
//! [`PriceVector`]; a simulated worker shifts a fixed daily energy budget away from
//! expensive hours and the controller is scored on what the resulting demand costs
//! at the utility's [`GridPriceSchedule`].

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Controlled hours per simulated day.
pub const HOURS: usize = 10;

/// Hourly prices proposed by the controller, currency per kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(pub Vec<f64>);

/// Hourly energy demand of the simulated worker, kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandProfile(pub Vec<f64>);

/// Utility prices the controller pays, currency per kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridPriceSchedule(pub Vec<f64>);

macro_rules! slice_newtype {
    ($name:ident) => {
        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

slice_newtype!(PriceVector);
slice_newtype!(DemandProfile);
slice_newtype!(GridPriceSchedule);

impl PriceVector {
    pub fn uniform(dim: usize, price: f64) -> Self {
        Self(vec![price; dim])
    }

    /// Checks length and that every entry is a finite price in `[0, p_max]`.
    pub fn validate(&self, dim: usize, p_max: f64) -> Result<()> {
        if self.len() != dim {
            return Err(Error::InvalidAction(format!(
                "expected {dim} hourly prices, got {}",
                self.len()
            )));
        }
        if let Some((i, p)) = self
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0 && **p <= p_max))
        {
            return Err(Error::InvalidAction(format!(
                "price[{i}] = {p} outside [0, {p_max}]"
            )));
        }
        Ok(())
    }
}

impl Default for GridPriceSchedule {
    /// Time-of-use tariff: 0.10 off-peak, 0.30 during hours 5–8.
    fn default() -> Self {
        Self(
            (1..=HOURS)
                .map(|h| if (5..=8).contains(&h) { 0.30 } else { 0.10 })
                .collect(),
        )
    }
}

/// Parameters of the simulated office worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerConfig {
    /// Demand when every hour is priced the same.
    pub baseline: DemandProfile,
    /// Price sensitivity of the hourly demand shares.
    pub elasticity: f64,
    /// Standard deviation of the multiplicative per-hour noise.
    pub noise_scale: f64,
}

impl Default for WorkerConfig {
    fn default() -> Self {
        Self {
            // A laptop-and-monitor office day: ramps up in the morning, peaks
            // around midday and tails off. Sums to 5 kWh.
            baseline: DemandProfile(vec![0.3, 0.4, 0.5, 0.6, 0.6, 0.6, 0.6, 0.5, 0.5, 0.4]),
            elasticity: 1.0,
            noise_scale: 0.0,
        }
    }
}

impl WorkerConfig {
    pub fn total_demand(&self) -> f64 {
        self.baseline.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub worker: WorkerConfig,
    pub grid: GridPriceSchedule,
    pub p_max: f64,
    pub episode_length: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            worker: WorkerConfig::default(),
            grid: GridPriceSchedule::default(),
            p_max: 10.0,
            episode_length: 30,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |key, reason: String| Err(Error::Config { key, reason });
        let b = &self.worker.baseline;
        if b.len() != HOURS {
            return cfg("env.baseline", format!("needs {HOURS} entries, got {}", b.len()));
        }
        if b.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return cfg("env.baseline", "entries must be finite and >= 0".into());
        }
        if self.worker.total_demand() <= 0.0 {
            return cfg("env.baseline", "total demand must be positive".into());
        }
        if self.grid.len() != HOURS {
            return cfg(
                "env.grid",
                format!("needs {HOURS} entries, got {}", self.grid.len()),
            );
        }
        if self.grid.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return cfg("env.grid", "entries must be finite and > 0".into());
        }
        if !(self.worker.elasticity.is_finite() && self.worker.elasticity >= 0.0) {
            return cfg("env.elasticity", "must be finite and >= 0".into());
        }
        if !(self.worker.noise_scale.is_finite() && self.worker.noise_scale >= 0.0) {
            return cfg("env.noise_scale", "must be finite and >= 0".into());
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return cfg("env.p_max", "must be finite and > 0".into());
        }
        if self.episode_length == 0 {
            return cfg("env.episode_length", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Demand of a price-elastic worker who conserves the daily total.
///
/// Hour `i` receives a share of the baseline total proportional to
/// `b_i · exp(−β·p_i)`. With noise enabled each hour is perturbed by the factor
/// `max(0, 1 + noise_scale·z_i)` and the profile is rescaled back to the total.
pub fn worker_response<R: Rng + ?Sized>(
    prices: &PriceVector,
    cfg: &WorkerConfig,
    rng: &mut R,
) -> DemandProfile {
    let total = cfg.total_demand();
    // Shifting every price by a constant leaves the shares unchanged and keeps
    // exp() away from underflow when β·p is large.
    let p_min = prices.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = cfg
        .baseline
        .iter()
        .zip(prices.iter())
        .map(|(b, p)| b * (-cfg.elasticity * (p - p_min)).exp())
        .collect();
    let mut demand = rescale(&weights, total);

    if cfg.noise_scale > 0.0 {
        let noisy: Vec<f64> = demand
            .iter()
            .map(|d| {
                let z: f64 = rng.sample(StandardNormal);
                d * (1.0 + cfg.noise_scale * z).max(0.0)
            })
            .collect();
        // All-zero needs every factor clipped at once; keep the noise-free day then.
        if noisy.iter().sum::<f64>() > 0.0 {
            demand = rescale(&noisy, total);
        }
    }
    DemandProfile(demand)
}

fn rescale(weights: &[f64], total: f64) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| total * w / sum).collect()
}

/// Negative log of the day's energy bill, so that a cheaper day scores higher.
pub fn energy_reward(demand: &DemandProfile, grid: &GridPriceSchedule) -> Result<f64> {
    let cost: f64 = demand.iter().zip(grid.iter()).map(|(d, g)| d * g).sum();
    if cost > 0.0 {
        Ok(-cost.ln())
    } else {
        Err(Error::NonPositiveCost(cost))
    }
}

/// What one day of interaction produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: DemandProfile,
    pub reward: f64,
    pub done: bool,
}

/// Gym-style interface the training loop drives.
pub trait DayEnvironment {
    /// Width of both the observation and the action.
    fn dim(&self) -> usize;
    fn p_max(&self) -> f64;
    /// Constant that maps raw observations to roughly unit scale.
    fn demand_scale(&self) -> f64;
    fn reset(&mut self) -> DemandProfile;
    fn step(&mut self, action: &PriceVector) -> Result<StepOutcome>;
}

/// The office simulation: one worker facing a static tariff.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    step_count: u64,
}

impl Environment {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            step_count: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Prices posted on the first morning of every episode.
    pub fn reset_prices(&self) -> PriceVector {
        PriceVector::uniform(HOURS, self.cfg.p_max / 2.0)
    }
}

impl DayEnvironment for Environment {
    fn dim(&self) -> usize {
        HOURS
    }

    fn p_max(&self) -> f64 {
        self.cfg.p_max
    }

    fn demand_scale(&self) -> f64 {
        self.cfg.worker.total_demand()
    }

    fn reset(&mut self) -> DemandProfile {
        self.step_count = 0;
        let prices = self.reset_prices();
        worker_response(&prices, &self.cfg.worker, &mut self.rng)
    }

    fn step(&mut self, action: &PriceVector) -> Result<StepOutcome> {
        action.validate(HOURS, self.cfg.p_max)?;
        let obs = worker_response(action, &self.cfg.worker, &mut self.rng);
        let reward = energy_reward(&obs, &self.cfg.grid)?;
        self.step_count += 1;
        Ok(StepOutcome {
            obs,
            reward,
            done: self.step_count.is_multiple_of(self.cfg.episode_length),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn zero_elasticity_returns_baseline() {
        let cfg = WorkerConfig {
            elasticity: 0.0,
            ..Default::default()
        };
        let p = PriceVector(vec![0.0, 9.0, 1.0, 3.0, 10.0, 2.0, 5.0, 5.0, 7.0, 0.5]);
        let d = worker_response(&p, &cfg, &mut rng());
        for (a, b) in d.iter().zip(cfg.baseline.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn uniform_prices_return_baseline() {
        let cfg = WorkerConfig::default();
        let d = worker_response(&PriceVector::uniform(HOURS, 3.7), &cfg, &mut rng());
        for (a, b) in d.iter().zip(cfg.baseline.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn single_expensive_hour_matches_closed_form() {
        let cfg = WorkerConfig {
            baseline: DemandProfile(vec![1.0; HOURS]),
            elasticity: 1.0,
            noise_scale: 0.0,
        };
        let mut p = vec![0.0; HOURS];
        p[HOURS - 1] = 1.0;
        let d = worker_response(&PriceVector(p), &cfg, &mut rng());
        let expected = crate::oracle::single_peak_demand();
        for (a, b) in d.iter().zip(expected.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn energy_reward_known_values() {
        let g = GridPriceSchedule(vec![1.0]);
        assert_eq!(energy_reward(&DemandProfile(vec![1.0]), &g).unwrap(), 0.0);
        assert_relative_eq!(
            energy_reward(&DemandProfile(vec![std::f64::consts::E]), &g).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert_eq!(
            energy_reward(&DemandProfile(vec![0.0]), &g),
            Err(Error::NonPositiveCost(0.0))
        );
    }

    #[test]
    fn energy_reward_default_day_matches_oracle() {
        let cfg = EnvConfig::default();
        let d = worker_response(&PriceVector::uniform(HOURS, 1.0), &cfg.worker, &mut rng());
        let expected = -crate::oracle::dot(&cfg.worker.baseline, &cfg.grid).ln();
        assert_relative_eq!(energy_reward(&d, &cfg.grid).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn reset_zero_elasticity_is_baseline_and_seeded() {
        let mut cfg = EnvConfig::default();
        cfg.worker.elasticity = 0.0;
        let mut env = Environment::new(cfg.clone(), 3).unwrap();
        assert_eq!(env.reset().0, cfg.worker.baseline.0);

        let mut noisy = EnvConfig::default();
        noisy.worker.noise_scale = 0.05;
        let a = Environment::new(noisy.clone(), 11).unwrap().reset();
        let b = Environment::new(noisy, 11).unwrap().reset();
        assert_eq!(a, b);
    }

    #[test]
    fn reset_uses_mid_range_uniform_prices() {
        let cfg = EnvConfig::default();
        let mut env = Environment::new(cfg.clone(), 0).unwrap();
        let direct = worker_response(
            &PriceVector::uniform(HOURS, cfg.p_max / 2.0),
            &cfg.worker,
            &mut rng(),
        );
        assert_eq!(env.reset(), direct);
        assert_eq!(env.step_count(), 0);
    }

    #[test]
    fn step_composes_worker_and_reward() {
        let cfg = EnvConfig::default();
        let mut env = Environment::new(cfg.clone(), 0).unwrap();
        env.reset();
        let action = PriceVector(cfg.grid.0.clone());
        let out = env.step(&action).unwrap();
        let demand = crate::oracle::elastic_demand(&cfg.worker.baseline, &action, 1.0);
        for (a, b) in out.obs.iter().zip(demand.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
        assert_relative_eq!(
            out.reward,
            -crate::oracle::dot(&demand, &cfg.grid).ln(),
            epsilon = 1e-13
        );
        assert_eq!(env.step_count(), 1);
        let again = env.step(&action).unwrap();
        assert_eq!(again.obs, out.obs);
        assert_eq!(again.reward, out.reward);
    }

    #[test]
    fn step_ignores_action_without_elasticity() {
        let mut cfg = EnvConfig::default();
        cfg.worker.elasticity = 0.0;
        let mut env = Environment::new(cfg.clone(), 0).unwrap();
        let out = env.step(&PriceVector(vec![
            10.0, 0.0, 10.0, 0.0, 10.0, 0.0, 10.0, 0.0, 10.0, 0.0,
        ]));
        assert_eq!(out.unwrap().obs.0, cfg.worker.baseline.0);
    }

    #[test]
    fn done_every_episode_length_steps() {
        let cfg = EnvConfig {
            episode_length: 3,
            ..Default::default()
        };
        let mut env = Environment::new(cfg, 0).unwrap();
        let a = PriceVector::uniform(HOURS, 1.0);
        let flags: Vec<bool> = (0..7).map(|_| env.step(&a).unwrap().done).collect();
        assert_eq!(flags, [false, false, true, false, false, true, false]);
    }

    #[test]
    fn invalid_actions_rejected() {
        let mut env = Environment::new(EnvConfig::default(), 0).unwrap();
        assert!(matches!(
            env.step(&PriceVector::uniform(9, 1.0)),
            Err(Error::InvalidAction(_))
        ));
        assert!(env.step(&PriceVector::uniform(HOURS, 10.5)).is_err());
        assert!(env.step(&PriceVector::uniform(HOURS, -0.1)).is_err());
        assert!(env.step(&PriceVector::uniform(HOURS, f64::NAN)).is_err());
        assert_eq!(env.step_count(), 0);
    }

    #[test]
    fn grid_prices_beat_uniform_prices() {
        let cfg = EnvConfig::default();
        let cost = |p: &PriceVector| {
            let d = worker_response(p, &cfg.worker, &mut rng());
            crate::oracle::dot(&d, &cfg.grid)
        };
        let tou = cost(&PriceVector(cfg.grid.0.clone()));
        let flat = cost(&PriceVector::uniform(HOURS, 0.2));
        assert!(tou < flat, "{tou} !< {flat}");
    }

    #[test]
    fn config_validation_names_key() {
        let mut cfg = EnvConfig::default();
        cfg.grid.0[2] = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::Config { key: "env.grid", .. })
        ));
        let mut cfg = EnvConfig::default();
        cfg.worker.baseline = DemandProfile(vec![0.0; HOURS]);
        assert!(matches!(
            cfg.validate(),
            Err(Error::Config {
                key: "env.baseline",
                ..
            })
        ));
    }

    fn prices() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..=10.0f64, HOURS)
    }

    proptest! {
        #[test]
        fn demand_is_conserved(p in prices(), beta in 0.0..5.0f64, noise in prop::sample::select(vec![0.0, 0.05, 0.5])) {
            let cfg = WorkerConfig { elasticity: beta, noise_scale: noise, ..Default::default() };
            let d = worker_response(&PriceVector(p), &cfg, &mut rng());
            prop_assert!((d.iter().sum::<f64>() - cfg.total_demand()).abs() <= 1e-9);
            prop_assert!(d.iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn raising_one_price_shifts_load_away(p in prices(), hour in 0..HOURS, bump in 0.01..3.0f64) {
            let cfg = WorkerConfig::default();
            let before = worker_response(&PriceVector(p.clone()), &cfg, &mut rng());
            let mut raised = p;
            raised[hour] += bump;
            let after = worker_response(&PriceVector(raised), &cfg, &mut rng());
            prop_assert!(after[hour] < before[hour]);
            for i in (0..HOURS).filter(|i| *i != hour) {
                prop_assert!(after[i] >= before[i] * (1.0 - 1e-12));
            }
        }
    }
}
