//! Just-in-time adaptive intervention engine for simulated stress-inoculation
//! training: biosignal processing, stress detection, preference-driven
//! intervention policy, a clinical-emergency scenario, synthetic trainees and
//! a deterministic simulation harness.

pub mod agent;
pub mod biosignal;
pub mod config;
pub mod detection;
pub mod error;
pub mod harness;
pub mod interface;
pub mod policy;
pub mod profile;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
