//! Joint transmit and reflective beamforming for secure parameter
//! estimation in IRS-aided wireless sensor networks.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod scenario;
pub mod sdp;
pub mod sdr_forms;

pub use error::{ConfigError, ExperimentError, ModelError, OptimizerError, ScenarioError, SdpError};
