//! Command-line front end for the borrowing-design pipeline.
//!
//! One binary, five subcommands: `train` builds and locks a design,
//! `decide` applies it to an observed trial, `simulate` estimates its
//! operating characteristics, `validate` audits the surrogates against
//! fresh posterior sampling, and `inspect` prints a design's provenance.
//! Every command is deterministic given its inputs and seed, and no
//! command rewrites an existing design file.

pub mod args;
pub mod commands;
pub mod config_file;
pub mod error;

pub use args::{Cli, Command, ModeArg};
pub use commands::{
    cmd_decide, cmd_inspect, cmd_simulate, cmd_train, cmd_validate, DecideReport, InspectReport,
    SimulateReport, TrainReport, ValidateReport,
};
pub use config_file::{ScenarioFile, TrainFileConfig};
pub use error::{
    CmdError, EXIT_DESIGN_MISMATCH, EXIT_FINGERPRINT, EXIT_TRAINING, EXIT_VALIDATION,
};

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of raw bytes, used for input digests in run
/// manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Runs one parsed command and renders its report to standard output.
pub fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            full_scale,
        } => {
            let report = cmd_train(&config, &out, seed, full_scale)?;
            print!("{}", report.render());
        }
        Command::Decide {
            design,
            observation,
            mode,
        } => {
            let report = cmd_decide(&design, &observation, mode.into())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Simulate {
            design,
            scenarios,
            out,
            manifest,
            seed,
            mode,
        } => {
            let report = cmd_simulate(
                &design,
                &scenarios,
                &out,
                manifest.as_deref(),
                seed,
                mode.into(),
            )?;
            print!("{}", report.render());
        }
        Command::Validate {
            design,
            grid_levels,
        } => {
            let report = cmd_validate(&design, grid_levels)?;
            print!("{}", report.render());
        }
        Command::Inspect { design } => {
            let report = cmd_inspect(&design)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
    }
    Ok(())
}
