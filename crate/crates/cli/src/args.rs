use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "mrlab", version, about = "Exact regret games and regret bounds for finite MDP classes")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Instance file, directory of instance files, `builtin:NAME` or
    /// `mab:T:MEANS` (arms separated by `,`, parameters by `/`).
    #[arg(long, global = true)]
    pub instance: Option<String>,

    /// `uniform`, `point:I`, `grid:RES` or explicit weights `w0,w1,...`.
    #[arg(long, global = true, default_value = "uniform")]
    pub prior: String,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tolerance: f64,

    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub tree_cap: Option<u64>,

    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub policy_cap: Option<u64>,

    /// Largest policy catalog solved as one explicit linear program.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub lp_cap: Option<u64>,

    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub mc_rollouts: u64,

    /// Output directory, created if missing. Not echoed into artifacts, so
    /// reruns elsewhere stay byte-identical.
    #[arg(long, global = true, default_value = "mrlab-out")]
    #[serde(skip)]
    pub out: PathBuf,

    /// Also write tidy long-format tables for plotting.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write seeded random instances.
    Gen(GenArgs),
    /// Certify that minimax regret equals worst-case minimum Bayesian regret.
    VerifyDuality,
    /// Report every applicable regret bound per prior.
    Bounds(BoundsArgs),
    /// Regret and bound scaling over horizon and arm-count grids.
    Sweep(SweepArgs),
    /// Minimum Bayesian regret per prior.
    Mbr(MbrArgs),
    /// Minimax regret and its mixed policy.
    Minimax,
    /// Thompson-sampling trajectories.
    SimulateTs(SimulateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Inclusive range `LO-HI` or a single value.
    #[arg(long, default_value = "1-2")]
    pub states: String,
    #[arg(long, default_value = "1-3")]
    pub actions: String,
    #[arg(long, default_value = "1-3")]
    pub outcomes: String,
    #[arg(long, default_value = "1-3")]
    pub params: String,
    #[arg(long, default_value = "1-3")]
    pub horizon: String,
    #[arg(long, default_value_t = 0.3)]
    pub sparsity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    Mab,
    Linear,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Probe::All)]
    pub probe: Probe,
    #[arg(long, value_delimiter = ',', default_value = "10,40,160")]
    pub horizons: Vec<usize>,
    /// Arm counts of the Bernoulli sweep.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub arms: Vec<usize>,
    /// Dimensions of the linear probe.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub dims: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct MbrArgs {
    /// Also solve the minimax game and check `mbr <= minimax` per prior.
    #[arg(long)]
    pub check_duality: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Environment parameter; drawn from the prior per rollout when absent.
    #[arg(long)]
    pub true_param: Option<usize>,
}
