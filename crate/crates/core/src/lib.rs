//! Simulation core for a chirally coupled emitter–microring system.
//!
//! The crate is organized around the physical pipeline:
//!
//! - [`params`]: derive all angular rates (resonator decay, emitter decay,
//!   vacuum coupling) from device-level specifications.
//! - [`chirality`]: optical-chirality math — the C/D measures of circular
//!   polarization, the evanescent-field model, the coupling split between
//!   counter-propagating modes, and field-map ingestion with the
//!   mode-volume integral.
//! - [`scattering`]: steady-state single-photon transport — closed-form
//!   transmission amplitudes, an independent linear-system solver, isolation
//!   metrics, and the bare two-mode backscattering solution.
//! - [`wavepacket`]: time-domain propagation of single-photon pulses in
//!   k-space, including simultaneous dual-direction input.
//! - [`emission`]: spontaneous emission of an excited emitter into the
//!   resonator modes and per-port waveguide collection.
//!
//! All rates are angular frequencies in rad/s unless a function documents
//! otherwise. Everything is pure and `Send + Sync`; parallel evaluation of
//! spectra and sweeps preserves output ordering.

pub mod chirality;
pub mod constants;
pub mod emission;
pub mod integrate;
pub mod params;
pub mod scattering;
pub mod wavepacket;

use num_complex::Complex64;

/// Complex amplitude type used throughout.
pub type C64 = Complex64;

pub use params::{EmitterSpec, ResonatorSpec, StarkSpec, SystemParams};

/// Unified error type for the simulation core.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation
    /// (non-positive rate, ratio outside [0, 1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A composite record violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// A denominator is exactly zero; scans fail loudly at poles instead of
    /// propagating NaN.
    #[error("singular system at detuning {delta_rad_s} rad/s: {context}")]
    Singularity { delta_rad_s: f64, context: String },

    /// Optical chirality is undefined for a zero in-plane field. This is an
    /// explicit state, never silently reported as D = 0 (which would claim
    /// linear polarization).
    #[error("optical chirality undefined: zero in-plane field")]
    UndefinedChirality,

    /// Isolation contrast is undefined when both transmissions vanish.
    #[error("isolation contrast undefined: T+ + T- = 0 at evaluation point")]
    UndefinedContrast,

    /// A data file does not match its documented schema.
    #[error("format error: {0}")]
    Format(String),

    /// A run request is inconsistent (pulse centered inside the interaction
    /// region, backscattering requested in a model that excludes it, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator produced a non-finite value.
    #[error("numerical failure at t = {t}: {context}")]
    NonFinite { t: f64, context: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Warning attached to a run whose residual excitation at `t_end` exceeded
/// the completeness threshold. The data are still returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompleteRun {
    /// Residual excitation left in the system at the end of the run.
    pub residual: f64,
    /// Threshold the residual was required to stay below.
    pub threshold: f64,
}

impl std::fmt::Display for IncompleteRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "incomplete run: residual {:.3e} above threshold {:.1e}",
            self.residual, self.threshold
        )
    }
}
