use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use smirl_cli::plot::{consumption_panels, write_svg};
use smirl_cli::runner::{read_csv, write_json};
use smirl_cli::{oracle, parse_config, run, sweep, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "smirl",
    version,
    about = "Price-setting agents with surprise minimization"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use only this SMiRL weight.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train smirl.alpha on every configured seed.
    Run,
    /// Train every (seed, alpha) pair and write the comparison report and figures.
    Sweep,
    /// Plot demand at selected days from run CSVs against the grid price.
    Plot {
        /// Comma-separated days, e.g. 2000,8000,16000,19999.
        #[arg(long, value_delimiter = ',', required = true)]
        steps: Vec<u64>,
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Print reference values from the independent oracles.
    Oracle,
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.run.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.run.seeds = vec![seed];
    }
    if let Some(alpha) = common.alpha {
        cfg.smirl.alpha = alpha;
        cfg.run.alphas = vec![alpha];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = load(&cli.common)?;
    let out = cfg.run.output_dir.clone();
    let quiet = cli.common.quiet;
    match cli.command {
        Command::Run => {
            let mut summaries = Vec::new();
            for &seed in &cfg.run.seeds {
                let (s, _) = run(&cfg, seed, cfg.smirl.alpha, &out)?;
                if !quiet {
                    eprintln!(
                        "seed {seed}: final-bin reward {:?}, steps to threshold {:?}, {:.1}s",
                        s.final_bin_reward, s.steps_to_threshold, s.wall_clock_seconds
                    );
                }
                summaries.push(s);
            }
            write_json(&out.join("summary.json"), &summaries)?;
        }
        Command::Sweep => {
            let report = sweep(&cfg, &out, quiet)?;
            if !quiet {
                print!("{}", smirl_cli::sweep::render_table(&report));
            }
            if let Some(cell) = report.cells.iter().find(|c| c.error.is_some()) {
                return Err(CliError::Abort {
                    seed: cell.seed,
                    alpha: cell.alpha,
                    reason: cell.error.clone().unwrap_or_default(),
                });
            }
        }
        Command::Plot { steps, csv } => {
            let runs = csv
                .iter()
                .map(|p| {
                    let name = p
                        .file_stem()
                        .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                    read_csv(p).map(|r| (name, r))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let svg = consumption_panels(&runs, &steps, &cfg.env.grid)?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let path = out.join("consumption.svg");
            write_svg(&path, &svg)?;
            if !quiet {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Oracle => print!("{}", oracle::report(&cfg)),
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors count as configuration errors; clap's own status 2 means
    // a training abort here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
