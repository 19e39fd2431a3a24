//! Seeds × α grid: parallel runs, a shared convergence threshold, a
//! comparison table and the reward/entropy figures.

use std::fmt::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::plot::{line_panel, write_svg, Series};
use crate::runner::{self, summarize, RunSummary, RunTrace};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.md";
pub const REWARD_FIGURE: &str = "fig_reward.svg";
pub const ENTROPY_FIGURE: &str = "fig_entropy.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub seed: u64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
    /// Set when the run failed; the rest of the sweep still completes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Medians across the successful seeds of one α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub alpha: f64,
    pub completed: usize,
    pub failed: usize,
    /// `None` when the median run never reached θ.
    pub median_steps_to_threshold: Option<f64>,
    pub median_final_reward: Option<f64>,
    pub median_final_entropy: Option<f64>,
    pub median_trailing_entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    /// Arm whose median final-bin reward sets θ.
    pub reference_alpha: f64,
    pub threshold: Option<f64>,
    pub arms: Vec<ArmSummary>,
    pub cells: Vec<Cell>,
}

impl SweepReport {
    pub fn arm(&self, alpha: f64) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.alpha == alpha)
    }

    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.error.is_some())
    }

    /// Completed summaries of one α, in seed order.
    pub fn runs(&self, alpha: f64) -> impl Iterator<Item = &RunSummary> {
        self.cells
            .iter()
            .filter(move |c| c.alpha == alpha)
            .filter_map(|c| c.summary.as_ref())
    }
}

/// Median of finite values; `None` for an empty slice. Infinite entries are
/// kept so censored values pull the median up.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    Some(m)
}

/// Runs every (seed, α) pair in `cfg.run` and writes the report into `out`.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<SweepReport, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let grid: Vec<(f64, u64)> = cfg
        .run
        .alphas
        .iter()
        .flat_map(|&a| cfg.run.seeds.iter().map(move |&s| (a, s)))
        .collect();

    let results: Vec<Result<(RunSummary, RunTrace), CliError>> = grid
        .par_iter()
        .map(|&(alpha, seed)| {
            let r = runner::run(cfg, seed, alpha, out);
            if !quiet {
                match &r {
                    Ok((s, _)) => {
                        eprintln!("seed {seed} alpha {alpha}: done in {:.1}s", s.wall_clock_seconds)
                    }
                    Err(e) => eprintln!("seed {seed} alpha {alpha}: failed: {e}"),
                }
            }
            r
        })
        .collect();
    // I/O problems are not per-cell failures.
    let mut cells = Vec::with_capacity(grid.len());
    let mut traces = Vec::with_capacity(grid.len());
    for (&(alpha, seed), r) in grid.iter().zip(results) {
        match r {
            Ok((summary, trace)) => {
                cells.push(Cell {
                    seed,
                    alpha,
                    summary: Some(summary),
                    error: None,
                });
                traces.push(Some(trace));
            }
            Err(e @ CliError::Io { .. }) => return Err(e),
            Err(e) => {
                cells.push(Cell {
                    seed,
                    alpha,
                    summary: None,
                    error: Some(e.to_string()),
                });
                traces.push(None);
            }
        }
    }

    let report = aggregate(cfg, cells, &traces);
    runner::write_json(&out.join(SUMMARY_FILE), &report)?;
    std::fs::write(out.join(REPORT_FILE), render_table(&report)).map_err(|e| CliError::io(out, e))?;
    let (reward, entropy) = figures(cfg, &report, &traces);
    write_svg(&out.join(REWARD_FIGURE), &reward)?;
    write_svg(&out.join(ENTROPY_FIGURE), &entropy)?;
    Ok(report)
}

/// θ from the reference arm, then per-cell statistics against that θ and
/// per-arm medians.
fn aggregate(cfg: &ExperimentConfig, mut cells: Vec<Cell>, traces: &[Option<RunTrace>]) -> SweepReport {
    let alphas = &cfg.run.alphas;
    let reference_alpha = if alphas.contains(&0.0) {
        0.0
    } else {
        alphas.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let reference: Vec<f64> = cells
        .iter()
        .filter(|c| c.alpha == reference_alpha)
        .filter_map(|c| c.summary.as_ref()?.final_bin_reward)
        .collect();
    let threshold = cfg
        .metrics
        .threshold
        .or_else(|| median(&reference).map(|m| cfg.metrics.threshold_fraction * m));

    for (cell, trace) in cells.iter_mut().zip(traces) {
        if let (Some(s), Some(t)) = (cell.summary.as_mut(), trace) {
            s.apply(summarize(t, &cfg.metrics, threshold));
        }
    }

    let arms = alphas
        .iter()
        .map(|&alpha| {
            let runs: Vec<&RunSummary> = cells
                .iter()
                .filter(|c| c.alpha == alpha)
                .filter_map(|c| c.summary.as_ref())
                .collect();
            let failed = cells
                .iter()
                .filter(|c| c.alpha == alpha && c.error.is_some())
                .count();
            let pick = |f: fn(&RunSummary) -> Option<f64>| {
                median(&runs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let steps: Vec<f64> = runs
                .iter()
                .map(|r| r.steps_to_threshold.map_or(f64::INFINITY, |s| s as f64))
                .collect();
            ArmSummary {
                alpha,
                completed: runs.len(),
                failed,
                median_steps_to_threshold: median(&steps).filter(|m| m.is_finite()),
                median_final_reward: pick(|r| r.final_bin_reward),
                median_final_entropy: pick(|r| r.final_sample_entropy),
                median_trailing_entropy: pick(|r| r.trailing_entropy),
            }
        })
        .collect();

    SweepReport {
        config_hash: cfg.hash(),
        reference_alpha,
        threshold,
        arms,
        cells,
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

pub fn render_table(report: &SweepReport) -> String {
    let mut s = String::new();
    writeln!(s, "# Sweep report\n").unwrap();
    writeln!(s, "config hash: `{}`\n", report.config_hash).unwrap();
    writeln!(
        s,
        "threshold: {} (reference alpha {})\n",
        fmt_opt(report.threshold, 4),
        report.reference_alpha
    )
    .unwrap();
    writeln!(
        s,
        "| alpha | runs | failed | median steps to threshold | median final reward | median final entropy | median trailing entropy |"
    )
    .unwrap();
    writeln!(s, "|---|---|---|---|---|---|---|").unwrap();
    for a in &report.arms {
        let steps = if a.completed == 0 {
            "n/a".to_string()
        } else {
            a.median_steps_to_threshold
                .map_or("not reached".to_string(), |v| format!("{v:.0}"))
        };
        writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            a.alpha,
            a.completed,
            a.failed,
            steps,
            fmt_opt(a.median_final_reward, 4),
            fmt_opt(a.median_final_entropy, 4),
            fmt_opt(a.median_trailing_entropy, 4)
        )
        .unwrap();
    }
    let failed: Vec<&Cell> = report.cells.iter().filter(|c| c.error.is_some()).collect();
    if !failed.is_empty() {
        writeln!(s, "\n## Failed runs\n").unwrap();
        for c in failed {
            writeln!(
                s,
                "- seed {} alpha {}: {}",
                c.seed,
                c.alpha,
                c.error.as_deref().unwrap_or("")
            )
            .unwrap();
        }
    }
    s
}

/// Mean and population std of every value in each bin, pooled across seeds.
pub fn pooled_bins(series: &[&[f64]], bin: usize) -> Vec<(f64, f64)> {
    let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
    (0..len.div_ceil(bin))
        .map(|k| {
            let vals: Vec<f64> = series
                .iter()
                .flat_map(|s| s.get(k * bin..((k + 1) * bin).min(s.len())).unwrap_or(&[]))
                .copied()
                .filter(|v| v.is_finite())
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

fn figures(cfg: &ExperimentConfig, report: &SweepReport, traces: &[Option<RunTrace>]) -> (String, String) {
    let bin = cfg.metrics.bin;
    let panel = |pick: fn(&RunTrace) -> &[f64]| -> Vec<Series> {
        cfg.run
            .alphas
            .iter()
            .map(|&alpha| {
                let runs: Vec<&[f64]> = report
                    .cells
                    .iter()
                    .zip(traces)
                    .filter(|(c, _)| c.alpha == alpha)
                    .filter_map(|(_, t)| t.as_ref().map(pick))
                    .collect();
                let bins = pooled_bins(&runs, bin);
                Series {
                    label: if alpha == 0.0 {
                        "PPO (α = 0)".to_string()
                    } else {
                        format!("SMiRL + PPO (α = {alpha})")
                    },
                    key: alpha.to_string(),
                    x: (0..bins.len()).map(|k| ((k + 1) * bin) as f64).collect(),
                    mean: bins.iter().map(|b| b.0).collect(),
                    std: bins.iter().map(|b| b.1).collect(),
                }
            })
            .collect()
    };
    let reward = line_panel(
        "(a) energy reward, binned",
        "day",
        "r_energy",
        &panel(|t| &t.r_energy),
    );
    let entropy = line_panel(
        "(b) summed hourly sample entropy, binned",
        "day",
        "sample entropy (nats)",
        &panel(|t| &t.sample_entropy),
    );
    (reward, entropy)
}
