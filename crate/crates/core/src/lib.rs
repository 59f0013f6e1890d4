//! Probe response of a hybrid piezo-optomechanical system: an optical
//! cavity and a microwave resonator coupled through a shared mechanical
//! mode, probed in the optomechanically induced transparency regime.
//!
//! The pipeline runs top to bottom:
//!
//! - [`params`] validates physical inputs and derives drive amplitudes.
//! - [`steady_state`] solves the nonlinear mean-field equations.
//! - [`response`] evaluates the linearized probe response.
//! - [`analysis`] extracts dressed modes and transparency windows.
//! - [`sweep`] runs named parameter sweeps and writes CSV/SVG output.

pub mod analysis;
pub mod constants;
pub mod cubic;
pub mod error;
pub mod params;
pub mod response;
pub mod spectrum_csv;
pub mod steady_state;
pub mod sweep;

pub use error::{Error, ErrorKind, Result};
pub use params::{
    build_config, build_params, drive_amplitudes, parse_config_str, Advisory, ConfigValue, DetuningMode,
    DriveAmplitudes, ModelConfig, RawConfig, SystemParams,
};
pub use response::{spectrum, DeltaGrid, Form, ProbeResponse};
pub use steady_state::{solve_steady, OperatingPoint, SteadyBranches, SteadyState};
