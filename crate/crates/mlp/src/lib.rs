//! Small dense feed-forward networks trained with mini-batch RMSProp.
//!
//! The crate covers exactly what the surrogate pipeline needs: ReLU
//! hidden layers with optional inverted dropout, sigmoid or linear
//! outputs, seeded deterministic training, k-fold architecture
//! selection, and JSON persistence of fitted models.

pub mod error;
pub mod model;
pub mod net;
pub mod spec;
pub mod train;

pub use error::MlpError;
pub use model::{
    init_model, load_model, save_model, Layer, MlpModel, TrainingSummary, MODEL_SCHEMA_VERSION,
};
pub use net::{forward, loss_and_gradient, ForwardMode, Gradients};
pub use spec::{HiddenActivation, MlpSpec, OutputActivation, TrainConfig};
pub use train::{cross_validate, default_candidate_grid, train, CvOutcome};
