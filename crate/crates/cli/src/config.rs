//! Experiment configuration: a TOML file with one table per concern.
//!
//! Every key is optional. Unknown keys are rejected so a typo cannot silently
//! fall back to a default.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use smirl_core::{
    EnvConfig, FixedLoadConfig, GridPriceSchedule, L1Constraint, PpoConfig, SmirlConfig, TrainOptions,
    WorkerConfig,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub env: EnvSection,
    pub smirl: SmirlConfig,
    pub ppo: PpoConfig,
    pub sampler: SamplerSection,
    pub metrics: MetricsSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    /// Hourly demand (kWh) under uniform prices.
    pub baseline: Vec<f64>,
    /// Hourly grid price ($/kWh).
    pub grid: Vec<f64>,
    pub elasticity: f64,
    pub noise_scale: f64,
    pub episode_length: u64,
    pub p_max: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let env = EnvConfig::default();
        Self {
            baseline: env.worker.baseline.0,
            grid: env.grid.0,
            elasticity: env.worker.elasticity,
            noise_scale: env.worker.noise_scale,
            episode_length: env.episode_length,
            p_max: env.p_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstrainL1 {
    #[default]
    Off,
    Project,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub constrain_l1: ConstrainL1,
    /// Target ‖p‖₁.
    pub norm_target: f64,
    /// Constant hourly load used when reporting fixed-load day prices.
    pub load_magnitude: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            constrain_l1: ConstrainL1::Off,
            norm_target: 10.0,
            load_magnitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Days in the sample-entropy window.
    pub window: usize,
    /// Days per bin for reward curves and the threshold search.
    pub bin: usize,
    pub threshold_tolerance: f64,
    /// θ as a fraction of the reference arm's median final-bin reward.
    pub threshold_fraction: f64,
    /// Absolute θ; overrides `threshold_fraction` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Days averaged for the trailing sample entropy.
    pub trailing_window: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            window: 100,
            bin: 100,
            threshold_tolerance: 0.05,
            threshold_fraction: 0.95,
            threshold: None,
            trailing_window: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub max_steps: u64,
    pub seeds: Vec<u64>,
    /// Weights visited by `sweep`; `run` uses `smirl.alpha`.
    pub alphas: Vec<f64>,
    pub output_dir: PathBuf,
    /// Keep the surprise buffer and log `r_smirl` when α = 0.
    pub track_smirl: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            max_steps: 20_000,
            seeds: vec![0, 1, 2, 3, 4],
            alphas: vec![0.0, 0.01, 0.12, 0.25],
            output_dir: PathBuf::from("results"),
            track_smirl: true,
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Missing { path: PathBuf, source: std::io::Error },
    Syntax { path: PathBuf, message: String },
    Invariant { key: String, reason: String },
}

impl ConfigError {
    fn invariant(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invariant {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Missing { path, source } => write!(f, "cannot read config {}: {source}", path.display()),
            Self::Syntax { path, message } => write!(f, "malformed config {}: {message}", path.display()),
            Self::Invariant { key, reason } => write!(f, "invalid config key `{key}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Missing {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        ConfigError::Syntax { message, .. } => ConfigError::Syntax {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        path: PathBuf::new(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn prefixed(section: &str, e: smirl_core::Error) -> ConfigError {
    match e {
        smirl_core::Error::Config { key, reason } if key.contains('.') => ConfigError::invariant(key, reason),
        smirl_core::Error::Config { key, reason } => {
            ConfigError::invariant(format!("{section}.{key}"), reason)
        }
        other => ConfigError::invariant(section, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env_config().validate().map_err(|e| prefixed("env", e))?;
        self.smirl.validate().map_err(|e| prefixed("smirl", e))?;
        self.ppo.validate().map_err(|e| prefixed("ppo", e))?;

        let s = &self.sampler;
        FixedLoadConfig {
            load_magnitude: s.load_magnitude,
            norm_target: s.norm_target,
        }
        .validate()
        .map_err(|e| prefixed("sampler", e))?;
        if s.constrain_l1 != ConstrainL1::Off && s.norm_target > self.env.p_max {
            // A single hour can carry the whole norm.
            return Err(ConfigError::invariant(
                "sampler.norm_target",
                format!("must not exceed env.p_max = {}", self.env.p_max),
            ));
        }

        let m = &self.metrics;
        if m.window < 2 {
            return Err(ConfigError::invariant("metrics.window", "must be at least 2"));
        }
        if m.bin == 0 {
            return Err(ConfigError::invariant("metrics.bin", "must be positive"));
        }
        if !(m.threshold_tolerance.is_finite() && m.threshold_tolerance >= 0.0) {
            return Err(ConfigError::invariant(
                "metrics.threshold_tolerance",
                "must be finite and >= 0",
            ));
        }
        if !(m.threshold_fraction.is_finite() && m.threshold_fraction > 0.0) {
            return Err(ConfigError::invariant(
                "metrics.threshold_fraction",
                "must be finite and > 0",
            ));
        }
        if m.threshold.is_some_and(|t| !t.is_finite()) {
            return Err(ConfigError::invariant("metrics.threshold", "must be finite"));
        }
        if m.trailing_window == 0 {
            return Err(ConfigError::invariant(
                "metrics.trailing_window",
                "must be positive",
            ));
        }

        let r = &self.run;
        if r.seeds.is_empty() {
            return Err(ConfigError::invariant("run.seeds", "must not be empty"));
        }
        if r.seeds.iter().collect::<HashSet<_>>().len() != r.seeds.len() {
            return Err(ConfigError::invariant("run.seeds", "must be distinct"));
        }
        if r.alphas.is_empty() {
            return Err(ConfigError::invariant("run.alphas", "must not be empty"));
        }
        for (i, a) in r.alphas.iter().enumerate() {
            if !(a.is_finite() && *a >= 0.0) {
                return Err(ConfigError::invariant(
                    "run.alphas",
                    format!("alpha {a} must be finite and >= 0"),
                ));
            }
            if r.alphas[..i].contains(a) {
                return Err(ConfigError::invariant(
                    "run.alphas",
                    format!("alpha {a} listed twice"),
                ));
            }
        }
        if r.output_dir.as_os_str().is_empty() {
            return Err(ConfigError::invariant("run.output_dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML form, ignoring where output is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.output_dir = PathBuf::new();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            worker: WorkerConfig {
                baseline: self.env.baseline.clone().into(),
                elasticity: self.env.elasticity,
                noise_scale: self.env.noise_scale,
            },
            grid: GridPriceSchedule(self.env.grid.clone()),
            p_max: self.env.p_max,
            episode_length: self.env.episode_length,
        }
    }

    pub fn smirl_for(&self, alpha: f64) -> SmirlConfig {
        SmirlConfig { alpha, ..self.smirl }
    }

    pub fn constraint(&self) -> L1Constraint {
        let target = self.sampler.norm_target;
        match self.sampler.constrain_l1 {
            ConstrainL1::Off => L1Constraint::Off,
            ConstrainL1::Project => L1Constraint::Project { target },
            ConstrainL1::Sample => L1Constraint::Sample { target },
        }
    }

    pub fn train_options(&self, seed: u64) -> TrainOptions {
        TrainOptions {
            max_steps: self.run.max_steps,
            seed,
            entropy_window: self.metrics.window,
            track_smirl: self.run.track_smirl,
            constraint: self.constraint(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.smirl.alpha, 0.12);
        assert_eq!(cfg.ppo.learning_rate, 0.003);
        assert_eq!(cfg.ppo.batch_size, 256);
        assert_eq!(cfg.ppo.clip, 0.3);
        assert_eq!(cfg.run.alphas, vec![0.0, 0.01, 0.12, 0.25]);
        assert_eq!(cfg.env_config(), EnvConfig::default());
    }

    #[test]
    fn negative_alpha_names_the_key() {
        let err = parse_config_str("[smirl]\nalpha = -1.0\n").unwrap_err();
        match &err {
            ConfigError::Invariant { key, .. } => assert_eq!(key, "smirl.alpha"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config_str("[ppo]\nlearning_rat = 0.1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }));
        assert!(err.to_string().contains("learning_rat"), "{err}");
        assert!(parse_config_str("[bogus]\n").is_err());
    }

    #[test]
    fn malformed_syntax_is_distinct() {
        let err = parse_config_str("[ppo\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }));
    }

    #[test]
    fn missing_file_is_distinct() {
        let err = parse_config(Path::new("/nonexistent/smirl.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Missing { .. }));
    }

    #[test]
    fn invariant_violations() {
        for (text, key) in [
            ("[run]\nseeds = []\n", "run.seeds"),
            ("[run]\nseeds = [1, 1]\n", "run.seeds"),
            ("[run]\nalphas = [0.1, 0.1]\n", "run.alphas"),
            ("[env]\nbaseline = [1.0]\n", "env.baseline"),
            ("[env]\np_max = 0.0\n", "env.p_max"),
            ("[ppo]\nminibatch_size = 512\n", "ppo.minibatch_size"),
            ("[metrics]\nbin = 0\n", "metrics.bin"),
            (
                "[sampler]\nconstrain_l1 = \"project\"\nnorm_target = 11.0\n",
                "sampler.norm_target",
            ),
        ] {
            match parse_config_str(text) {
                Err(ConfigError::Invariant { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.smirl.alpha = 0.25;
        cfg.sampler.constrain_l1 = ConstrainL1::Sample;
        cfg.metrics.threshold = Some(0.5);
        cfg.run.seeds = vec![7, 3];
        cfg.env.grid[2] = 0.123456789012345;
        let back = parse_config_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(parse_config_str(&back.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.run.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.ppo.clip = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn constraint_modes() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.constraint(), L1Constraint::Off);
        cfg.sampler.constrain_l1 = ConstrainL1::Project;
        assert_eq!(cfg.constraint(), L1Constraint::Project { target: 10.0 });
    }
}
