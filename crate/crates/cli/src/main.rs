//! `triage`: fit, filter, sweep, simulate and report.

mod commands;
mod error;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Route AI-assigned rubric scores to auto-accept or human review")]
pub struct Cli {
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed for `simulate` (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the summary printed on success.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the 2PL model to a score matrix and write the params file.
    Fit(FitArgs),
    /// Accept or route every AI cell at one (t, r) setting.
    Filter(FilterArgs),
    /// Agreement and acceptance rate over a grid of (t, r).
    Sweep(SweepArgs),
    /// Generate a synthetic exam (rubric, ground truth, AI scores, provenance).
    Simulate(SimulateArgs),
    /// Render SVG figures from params, decisions and score files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct MissingArgs {
    /// Leave absent cells out of the likelihood instead of scoring them 0.
    #[arg(long)]
    pub keep_missing: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub rubric: PathBuf,
    #[arg(long, default_value_t = 41)]
    pub nodes: usize,
    /// Half-width of the ability interval covered by the quadrature grid.
    #[arg(long, default_value_t = 5.0)]
    pub range: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub missing: MissingArgs,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub rubric: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Minimum normalized AI score for auto-acceptance.
    #[arg(short = 't', long = "min-credit", default_value_t = 0.0)]
    pub t: f64,
    /// Maximum risk |s - p| for auto-acceptance.
    #[arg(short = 'r', long = "max-risk", default_value_t = 1.0)]
    pub r: f64,
    #[command(flatten)]
    pub missing: MissingArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub ai: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub rubric: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Comma list or start:stop:step.
    #[arg(long, default_value = grid::DEFAULT_T_GRID)]
    pub t_grid: String,
    #[arg(long, default_value = grid::DEFAULT_R_GRID)]
    pub r_grid: String,
    #[command(flatten)]
    pub missing: MissingArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with synthetic-exam settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub students: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub fn_rate: Option<f64>,
    #[arg(long)]
    pub fp_rate: Option<f64>,
    #[arg(long)]
    pub partial_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Params file: ICC figure and table.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Decisions CSV: risk heatmap.
    #[arg(long)]
    pub decisions: Option<PathBuf>,
    /// AI scores: agreement scatter (with --truth and --rubric).
    #[arg(long)]
    pub ai: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Rubric; also fixes the heatmap column order.
    #[arg(long)]
    pub rubric: Option<PathBuf>,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub theta_step: f64,
    #[command(flatten)]
    pub missing: MissingArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                print!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("triage: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
