//! Process-level error type: every failure carries the exit code the
//! binary should return and a machine-readable kind for the JSON error
//! record printed on standard error.

use std::fmt;

use histborrow_design::DesignError;
use serde::Serialize;

/// Exit code for malformed inputs: configs, data files, observations.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for failures while training or simulating.
pub const EXIT_TRAINING: i32 = 3;
/// Exit code for a stored design whose content hash does not verify.
pub const EXIT_FINGERPRINT: i32 = 4;
/// Exit code for an observation that does not match the loaded design.
pub const EXIT_DESIGN_MISMATCH: i32 = 5;

/// A command failure, ready to print and turn into an exit status.
#[derive(Debug)]
pub struct CmdError {
    pub exit_code: i32,
    pub kind: &'static str,
    pub message: String,
}

/// The JSON shape emitted on standard error.
#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: i32,
}

impl CmdError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_VALIDATION,
            kind: "validation",
            message: message.into(),
        }
    }

    pub fn training(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_TRAINING,
            kind: "training",
            message: message.into(),
        }
    }

    /// One line of JSON suitable for standard error.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ErrorRecord {
            error: self.kind,
            message: &self.message,
            exit_code: self.exit_code,
        })
        .expect("error record serializes")
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CmdError {}

/// Which phase of a command an error surfaced in. Input handling maps
/// i/o and parse failures to the validation exit code; once inputs are
/// accepted the same failures count against the run itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    ReadingInputs,
    Running,
}

/// Maps a pipeline error to the documented exit codes.
pub fn from_design_error(err: DesignError, stage: Stage) -> CmdError {
    let message = err.to_string();
    let (exit_code, kind) = match &err {
        DesignError::FingerprintMismatch { .. } => (EXIT_FINGERPRINT, "fingerprint_mismatch"),
        DesignError::DesignMismatch(_) => (EXIT_DESIGN_MISMATCH, "design_mismatch"),
        DesignError::Validation(_) | DesignError::InvalidConfig(_) | DesignError::InvalidRange(_) => {
            (EXIT_VALIDATION, "validation")
        }
        DesignError::TooManyExclusions { .. }
        | DesignError::GridExhausted
        | DesignError::Mcmc(_)
        | DesignError::Mlp(_) => (EXIT_TRAINING, "training"),
        DesignError::Io(_) | DesignError::Json(_) | DesignError::Csv(_) => match stage {
            Stage::ReadingInputs => (EXIT_VALIDATION, "validation"),
            Stage::Running => (EXIT_TRAINING, "training"),
        },
    };
    CmdError {
        exit_code,
        kind,
        message,
    }
}
