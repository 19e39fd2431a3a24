//! A single training run: one seed, one α, one CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use smirl_core::agent::train;
use smirl_core::metrics::{bin_series, steps_to_threshold};
use smirl_core::{Environment, SmirlBuffer, StepRecord};

use crate::config::{ExperimentConfig, MetricsSection};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferSnapshot {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl From<&SmirlBuffer> for BufferSnapshot {
    fn from(b: &SmirlBuffer) -> Self {
        Self {
            count: b.count(),
            mean: b.mean().to_vec(),
            m2: b.m2().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub alpha: f64,
    /// CSV file name, relative to the output directory.
    pub csv: String,
    pub steps: u64,
    /// Mean `r_energy` over the last bin.
    pub final_bin_reward: Option<f64>,
    pub threshold: Option<f64>,
    /// Days until the end of the first bin that reaches θ and stays near it.
    pub steps_to_threshold: Option<u64>,
    pub final_sample_entropy: Option<f64>,
    /// Mean sample entropy over the trailing window.
    pub trailing_entropy: Option<f64>,
    pub buffer: BufferSnapshot,
    /// Kept out of serialized output so result directories are reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// Per-day series retained for aggregation and plotting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub r_energy: Vec<f64>,
    pub sample_entropy: Vec<f64>,
}

pub fn csv_name(seed: u64, alpha: f64) -> String {
    format!("run_seed{seed}_alpha{alpha}.csv")
}

/// Final-bin reward, θ-crossing and entropy statistics of one series.
pub fn summarize(trace: &RunTrace, metrics: &MetricsSection, threshold: Option<f64>) -> Stats {
    let bins = bin_series(&trace.r_energy, metrics.bin);
    let final_bin_reward = bins.last().map(|b| b.mean);
    let threshold = threshold
        .or(metrics.threshold)
        .or(final_bin_reward.map(|r| metrics.threshold_fraction * r));
    let n = trace.r_energy.len() as u64;
    let steps_to = threshold.and_then(|t| {
        steps_to_threshold(&bins, t, metrics.threshold_tolerance)
            .map(|i| ((i as u64 + 1) * metrics.bin as u64).min(n))
    });
    let finite: Vec<f64> = trace
        .sample_entropy
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let tail = &finite[finite.len().saturating_sub(metrics.trailing_window)..];
    Stats {
        final_bin_reward,
        threshold,
        steps_to_threshold: steps_to,
        final_sample_entropy: trace.sample_entropy.last().copied().filter(|v| v.is_finite()),
        trailing_entropy: (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub final_bin_reward: Option<f64>,
    pub threshold: Option<f64>,
    pub steps_to_threshold: Option<u64>,
    pub final_sample_entropy: Option<f64>,
    pub trailing_entropy: Option<f64>,
}

impl RunSummary {
    pub fn apply(&mut self, s: Stats) {
        self.final_bin_reward = s.final_bin_reward;
        self.threshold = s.threshold;
        self.steps_to_threshold = s.steps_to_threshold;
        self.final_sample_entropy = s.final_sample_entropy;
        self.trailing_entropy = s.trailing_entropy;
    }
}

/// Trains one (seed, α) cell and writes `<out>/run_seed<seed>_alpha<alpha>.csv`.
///
/// A training abort leaves the rows written so far followed by a
/// `# truncated: …` line.
pub fn run(
    cfg: &ExperimentConfig,
    seed: u64,
    alpha: f64,
    out: &Path,
) -> Result<(RunSummary, RunTrace), CliError> {
    let started = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let name = csv_name(seed, alpha);
    let path = out.join(&name);
    let io = |e| CliError::io(&path, e);
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    writeln!(w, "{}", StepRecord::csv_header()).map_err(io)?;

    let mut env = Environment::new(cfg.env_config(), seed).map_err(|e| CliError::Config(e.to_string()))?;
    let mut trace = RunTrace::default();
    let mut write_err: Option<std::io::Error> = None;
    let result = train(
        &mut env,
        &cfg.smirl_for(alpha),
        &cfg.ppo,
        &cfg.train_options(seed),
        |r: &StepRecord| {
            trace.r_energy.push(r.r_energy);
            trace.sample_entropy.push(r.sample_entropy);
            writeln!(w, "{}", r.to_csv_row()).map_err(|e| {
                let msg = e.to_string();
                write_err = Some(e);
                smirl_core::Error::Sink(msg)
            })
        },
    );

    let output = match result {
        Ok(o) => o,
        Err(e) => {
            if let Some(e) = write_err {
                return Err(io(e));
            }
            writeln!(w, "# truncated: {e}").map_err(io)?;
            w.flush().map_err(io)?;
            return Err(CliError::Abort {
                seed,
                alpha,
                reason: e.to_string(),
            });
        }
    };
    w.flush().map_err(io)?;

    let mut summary = RunSummary {
        config_hash: cfg.hash(),
        seed,
        alpha,
        csv: name,
        steps: trace.r_energy.len() as u64,
        final_bin_reward: None,
        threshold: None,
        steps_to_threshold: None,
        final_sample_entropy: None,
        trailing_entropy: None,
        buffer: BufferSnapshot::from(&output.buffer),
        wall_clock_seconds: 0.0,
    };
    summary.apply(summarize(&trace, &cfg.metrics, None));
    summary.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok((summary, trace))
}

/// Reads a run CSV back into records, skipping a trailing truncation marker.
pub fn read_csv(path: &Path) -> Result<Vec<StepRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != StepRecord::csv_header() {
        return Err(CliError::Data(format!("{}: unexpected header", path.display())));
    }
    lines
        .filter(|l| !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            StepRecord::from_csv_row(l)
                .map_err(|e| CliError::Data(format!("{} row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        assert_eq!(csv_name(3, 0.0), "run_seed3_alpha0.csv");
        assert_eq!(csv_name(0, 0.12), "run_seed0_alpha0.12.csv");
    }

    #[test]
    fn summary_of_a_step_series() {
        let metrics = MetricsSection {
            bin: 10,
            trailing_window: 5,
            ..Default::default()
        };
        let trace = RunTrace {
            r_energy: (0..35).map(|i| if i < 20 { 0.0 } else { 1.0 }).collect(),
            sample_entropy: (0..35)
                .map(|i| if i == 0 { f64::NAN } else { i as f64 })
                .collect(),
        };
        let s = summarize(&trace, &metrics, None);
        assert_eq!(s.final_bin_reward, Some(1.0));
        assert_eq!(s.threshold, Some(0.95));
        // Bin 2 (days 20..30) is the first at θ.
        assert_eq!(s.steps_to_threshold, Some(30));
        assert_eq!(s.final_sample_entropy, Some(34.0));
        assert_eq!(s.trailing_entropy, Some(32.0));

        let s = summarize(&trace, &metrics, Some(2.0));
        assert_eq!(s.steps_to_threshold, None);
    }

    #[test]
    fn empty_series() {
        let s = summarize(&RunTrace::default(), &MetricsSection::default(), None);
        assert_eq!(s.final_bin_reward, None);
        assert_eq!(s.threshold, None);
        assert_eq!(s.steps_to_threshold, None);
        assert_eq!(s.trailing_entropy, None);
    }
}
