//! On-disk formats the binary reads: the training configuration (one
//! JSON document referencing the historical data file) and the scenario
//! list for simulation runs.

use std::path::{Path, PathBuf};

use histborrow_core::types::{
    EndpointConfig, HistoricalDataset, Interval, ParameterSpaces, SCHEMA_VERSION,
};
use histborrow_design::{Budgets, DesignConfig, Scenario, SurrogateTrainingConfig};
use histborrow_mcmc::McmcConfig;
use serde::{Deserialize, Serialize};

use crate::error::{from_design_error, CmdError, Stage};

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

fn default_alpha() -> f64 {
    0.05
}

/// The training configuration document.
///
/// Historical data lives in its own file, named here by a path resolved
/// relative to this document's directory. Budgets, architecture search
/// settings, and sampler settings default to the desk-scale profile and
/// can be overridden wholesale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFileConfig {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub seed: u64,
    pub n_control: u32,
    pub n_treatment: u32,
    /// Nominal family-wise error level.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Margin each treatment-minus-control difference must exceed;
    /// zeros when omitted.
    #[serde(default)]
    pub promise_margins: Option<Vec<f64>>,
    /// Path to the historical dataset JSON, relative to this file.
    pub history_file: String,
    /// Control response-rate range per endpoint.
    pub control_ranges: Vec<[f64; 2]>,
    /// Treatment-effect range per endpoint.
    pub effect_ranges: Vec<[f64; 2]>,
    /// Control-rate scenarios anchoring the constant-cutoff baseline.
    pub baseline_scenarios: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Budgets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogates: Option<SurrogateTrainingConfig>,
    /// Sampler override; its `seed` field is ignored because every fit
    /// draws its stream from the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
}

impl TrainFileConfig {
    /// Reads and parses the document.
    pub fn read(path: &Path) -> Result<Self, CmdError> {
        let bytes = std::fs::read(path).map_err(|e| {
            CmdError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_slice(&bytes).map_err(|e| {
            CmdError::validation(format!("cannot parse config {}: {e}", path.display()))
        })
    }

    /// The historical-data path, resolved against the config directory.
    pub fn history_path(&self, config_path: &Path) -> PathBuf {
        let history = Path::new(&self.history_file);
        if history.is_absolute() {
            history.to_path_buf()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(history)
        }
    }

    /// Assembles a full design configuration, loading the historical
    /// data file on the way.
    pub fn to_design_config(
        &self,
        config_path: &Path,
        seed_override: Option<u64>,
        full_scale: bool,
    ) -> Result<DesignConfig, CmdError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CmdError::validation(format!(
                "config {}: unsupported schema_version {}",
                config_path.display(),
                self.schema_version
            )));
        }
        let history_path = self.history_path(config_path);
        let history_bytes = std::fs::read(&history_path).map_err(|e| {
            CmdError::validation(format!(
                "cannot read history file {}: {e}",
                history_path.display()
            ))
        })?;
        let history: HistoricalDataset = serde_json::from_slice(&history_bytes).map_err(|e| {
            CmdError::validation(format!(
                "cannot parse history file {}: {e}",
                history_path.display()
            ))
        })?;

        let mut endpoints = EndpointConfig::default_two_endpoint(self.alpha);
        if let Some(margins) = &self.promise_margins {
            endpoints.promise_margins = margins.clone();
        }
        let spaces = ParameterSpaces::new(
            self.control_ranges
                .iter()
                .map(|r| Interval::new(r[0], r[1]))
                .collect(),
            self.effect_ranges
                .iter()
                .map(|r| Interval::new(r[0], r[1]))
                .collect(),
        );

        let seed = seed_override.unwrap_or(self.seed);
        let mut cfg = DesignConfig::desk_scale(
            endpoints,
            spaces,
            history,
            self.n_control,
            self.n_treatment,
            self.baseline_scenarios.clone(),
            seed,
        );
        if full_scale {
            cfg.to_full_scale();
        }
        if let Some(budgets) = &self.budgets {
            cfg.budgets = budgets.clone();
        }
        if let Some(surrogates) = &self.surrogates {
            cfg.surrogates = surrogates.clone();
        }
        if let Some(mcmc) = &self.mcmc {
            cfg.mcmc = mcmc.clone();
            cfg.mcmc.seed = seed;
        }
        cfg.validate()
            .map_err(|e| from_design_error(e, Stage::ReadingInputs))?;
        Ok(cfg)
    }
}

/// A versioned list of simulation scenarios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    /// Reads the scenario list along with a content digest of the raw
    /// bytes for the run manifest.
    pub fn read(path: &Path) -> Result<(Self, String), CmdError> {
        let bytes = std::fs::read(path).map_err(|e| {
            CmdError::validation(format!("cannot read scenario file {}: {e}", path.display()))
        })?;
        let file: ScenarioFile = serde_json::from_slice(&bytes).map_err(|e| {
            CmdError::validation(format!(
                "cannot parse scenario file {}: {e}",
                path.display()
            ))
        })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CmdError::validation(format!(
                "scenario file {}: unsupported schema_version {}",
                path.display(),
                file.schema_version
            )));
        }
        let digest = crate::sha256_hex(&bytes);
        Ok((file, digest))
    }
}
