//! Shared foundation for the historical-borrowing design engine.
//!
//! This crate holds the domain types exchanged between the sampler, the
//! network engine and the design pipeline, together with their structural
//! validation, JSON (de)serialization, deterministic seed-stream derivation
//! and the small dense symmetric-matrix kernels used by the sampler.

pub mod kahan;
pub mod linalg;
pub mod streams;
pub mod types;

pub use types::{
    empirical_rates, validate_dataset, CurrentTrialObservation, EndpointConfig, HierPriorConfig,
    HistoricalDataset, HistoricalStudy, Interval, ParameterSpaces, SymmetricMatrix,
    ValidationReport, SCHEMA_VERSION,
};
