//! Command implementations. Each command parses its config section fully
//! (so unknown keys are caught before any computation), runs the core
//! operations, and writes its outputs plus the metadata sidecar.

pub mod derive;
pub mod emission;
pub mod field;
pub mod spectrum;
pub mod sweep;
pub mod wavepacket;

use std::path::PathBuf;

use crate::config::RawConfig;
use crate::output::{DataFormat, Provenance};
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a RawConfig,
    pub out_dir: PathBuf,
    pub format: DataFormat,
    pub provenance: Provenance,
    pub check_grid: bool,
}

impl Context<'_> {
    /// Call once all config keys are consumed, before computing/writing.
    pub fn config_done(&self) -> Result<(), CliError> {
        self.cfg.finish()
    }
}

/// Conversion helpers between rad/s and the 2π × GHz convention.
pub fn to_ghz(rate_rad_s: f64) -> f64 {
    rate_rad_s / (2.0 * std::f64::consts::PI * 1e9)
}
