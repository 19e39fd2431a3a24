//! Sample entropy, binning and the per-day log record.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::env::HOURS;

/// Trailing window of demand profiles for sample-entropy estimates.
#[derive(Debug, Clone)]
pub struct EntropyTracker {
    window: VecDeque<Vec<f64>>,
    capacity: usize,
    variance_floor: f64,
}

impl EntropyTracker {
    pub const DEFAULT_WINDOW: usize = 100;
    pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

    pub fn new(capacity: usize) -> Self {
        Self::with_floor(capacity, Self::DEFAULT_VARIANCE_FLOOR)
    }

    pub fn with_floor(capacity: usize, variance_floor: f64) -> Self {
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
            variance_floor,
        }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn push(&mut self, obs: &[f64]) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(obs.to_vec());
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.window.iter().map(Vec::as_slice)
    }

    /// Per-dimension Gaussian entropies `½ ln(2πe σ_i²)` of the window.
    /// `None` until the window holds two profiles.
    pub fn per_dim_entropy(&self) -> Option<Vec<f64>> {
        let n = self.window.len();
        if n < 2 {
            return None;
        }
        let dim = self.window[0].len();
        let mut out = Vec::with_capacity(dim);
        for i in 0..dim {
            let mean = self.window.iter().map(|o| o[i]).sum::<f64>() / n as f64;
            let var = self.window.iter().map(|o| (o[i] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let var = var.max(self.variance_floor);
            out.push(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln());
        }
        Some(out)
    }

    /// Summed hourly sample entropy of the window.
    pub fn sample_entropy(&self) -> Option<f64> {
        self.per_dim_entropy().map(|h| h.iter().sum())
    }
}

/// Mean and population standard deviation of one bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub mean: f64,
    pub std: f64,
}

/// Consecutive non-overlapping bins; a trailing partial bin is kept.
/// Non-finite values are skipped; a bin with nothing finite has NaN moments.
pub fn bin_series(values: &[f64], bin: usize) -> Vec<Bin> {
    assert!(bin >= 1, "bin size must be positive");
    values
        .chunks(bin)
        .map(|chunk| {
            let finite: Vec<f64> = chunk.iter().copied().filter(|v| v.is_finite()).collect();
            let n = finite.len() as f64;
            let mean = finite.iter().sum::<f64>() / n;
            let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            Bin {
                mean,
                std: var.sqrt(),
            }
        })
        .collect()
}

/// First bin whose mean reaches `threshold` and after which no bin falls below
/// `threshold − tolerance`.
pub fn steps_to_threshold(bins: &[Bin], threshold: f64, tolerance: f64) -> Option<usize> {
    let floor = threshold - tolerance;
    // Walk back from the end until the first bin below the floor.
    let mut first = None;
    for (i, b) in bins.iter().enumerate().rev() {
        if b.mean < floor {
            break;
        }
        if b.mean >= threshold {
            first = Some(i);
        }
    }
    first
}

/// One simulated day of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub seed: u64,
    pub alpha: f64,
    pub r_energy: f64,
    pub r_smirl: f64,
    pub r_combined: f64,
    /// NaN while the entropy window is still warming up.
    pub sample_entropy: f64,
    pub prices: Vec<f64>,
    pub demand: Vec<f64>,
}

impl StepRecord {
    pub fn csv_header() -> String {
        let mut h = String::from("step,seed,alpha,r_energy,r_smirl,r_combined,sample_entropy");
        for i in 1..=HOURS {
            write!(h, ",price_{i}").unwrap();
        }
        for i in 1..=HOURS {
            write!(h, ",demand_{i}").unwrap();
        }
        h
    }

    /// One CSV line without the terminator. `{}` on f64 is the shortest
    /// representation that parses back to the same bits.
    pub fn to_csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{}",
            self.step,
            self.seed,
            self.alpha,
            self.r_energy,
            self.r_smirl,
            self.r_combined,
            self.sample_entropy
        );
        for v in self.prices.iter().chain(&self.demand) {
            write!(row, ",{v}").unwrap();
        }
        row
    }

    pub fn from_csv_row(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        let width = 7 + 2 * HOURS;
        if fields.len() != width {
            return Err(format!("expected {width} fields, got {}", fields.len()));
        }
        let float = |i: usize| {
            fields[i]
                .parse::<f64>()
                .map_err(|e| format!("field {i} ({:?}): {e}", fields[i]))
        };
        let int = |i: usize| {
            fields[i]
                .parse::<u64>()
                .map_err(|e| format!("field {i} ({:?}): {e}", fields[i]))
        };
        Ok(Self {
            step: int(0)?,
            seed: int(1)?,
            alpha: float(2)?,
            r_energy: float(3)?,
            r_smirl: float(4)?,
            r_combined: float(5)?,
            sample_entropy: float(6)?,
            prices: (7..7 + HOURS).map(float).collect::<Result<_, _>>()?,
            demand: (7 + HOURS..width).map(float).collect::<Result<_, _>>()?,
        })
    }
}
