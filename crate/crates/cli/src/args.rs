//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use histborrow_design::DecisionMode;

/// Historical-control borrowing designs: train them once, lock them to
/// disk, and apply or audit them instantly.
#[derive(Debug, Parser)]
#[command(name = "histborrow", version, about)]
pub struct Cli {
    /// Upper bound on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every surrogate network and write a locked design file.
    Train {
        /// Training configuration document.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the design; must not already exist.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the configuration document.
        #[arg(long)]
        seed: Option<u64>,
        /// Production-scale budgets instead of the desk-scale defaults.
        #[arg(long, default_value_t = false)]
        full_scale: bool,
    },
    /// Analyze one observed trial with a locked design.
    Decide {
        /// Design file written by `train`.
        #[arg(long)]
        design: PathBuf,
        /// Observed counts document.
        #[arg(long)]
        observation: PathBuf,
        /// Analysis path to run.
        #[arg(long, value_enum, default_value_t = ModeArg::Surrogate)]
        mode: ModeArg,
    },
    /// Estimate operating characteristics over a scenario list.
    Simulate {
        #[arg(long)]
        design: PathBuf,
        /// Scenario list document.
        #[arg(long)]
        scenarios: PathBuf,
        /// Results CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Run manifest path; defaults to the results path with a
        /// `manifest.json` extension.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Overrides the design seed for replicate streams.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Surrogate)]
        mode: ModeArg,
    },
    /// Compare the surrogate against fresh posterior sampling on a
    /// probe grid and report divergence quantiles.
    Validate {
        #[arg(long)]
        design: PathBuf,
        /// Probe levels per control endpoint.
        #[arg(long, default_value_t = 5)]
        grid_levels: usize,
    },
    /// Print a locked design's provenance and structure.
    Inspect {
        #[arg(long)]
        design: PathBuf,
    },
}

/// CLI spelling of the analysis paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Networks for both promise probabilities and critical values.
    Surrogate,
    /// Network promise probabilities against the constant cutoff.
    ConstantBaseline,
    /// Fresh posterior sampling for the promise probabilities.
    FreshMcmc,
}

impl From<ModeArg> for DecisionMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Surrogate => DecisionMode::Surrogate,
            ModeArg::ConstantBaseline => DecisionMode::ConstantBaseline,
            ModeArg::FreshMcmc => DecisionMode::FreshMcmc,
        }
    }
}
