//! Derivation and validation of all physical rates of the coupled system
//! from user-facing device specifications.
//!
//! The canonical internal unit is angular frequency in rad/s. A value quoted
//! as "X GHz" in the usual 2π × X GHz convention corresponds to
//! `2π · X · 1e9` rad/s here.

use std::f64::consts::PI;

use crate::constants::{C_LIGHT, DEBYE, EPS0, HBAR};
use crate::{C64, Error, Result};

/// Resonator description at the device level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSpec {
    /// Resonance wavelength λ_c, m.
    pub wavelength_c: f64,
    /// Intrinsic quality factor Q_in (dimensionless, > 1).
    pub q_intrinsic: f64,
    /// κ_ex / κ_i; 1 means critical coupling.
    pub kappa_ex_ratio: f64,
    /// Effective mode volume V_m, m³.
    pub mode_volume: f64,
    /// Core refractive index.
    pub n_core: f64,
    /// Cladding refractive index (must be below `n_core`).
    pub n_clad: f64,
}

impl ResonatorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_c > 0.0) {
            return Err(Error::Validation(format!(
                "wavelength_c must be positive, got {}",
                self.wavelength_c
            )));
        }
        if !(self.q_intrinsic > 1.0) {
            return Err(Error::Validation(format!(
                "q_intrinsic must exceed 1, got {}",
                self.q_intrinsic
            )));
        }
        if !(self.mode_volume > 0.0) {
            return Err(Error::Validation(format!(
                "mode_volume must be positive, got {}",
                self.mode_volume
            )));
        }
        if !(self.kappa_ex_ratio >= 0.0) {
            return Err(Error::Validation(format!(
                "kappa_ex_ratio must be non-negative, got {}",
                self.kappa_ex_ratio
            )));
        }
        if !(self.n_core > self.n_clad && self.n_clad > 0.0) {
            return Err(Error::Validation(format!(
                "need n_core > n_clad > 0, got n_core = {}, n_clad = {}",
                self.n_core, self.n_clad
            )));
        }
        Ok(())
    }
}

/// Emitter description at the device level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSpec {
    /// Transition dipole moment |d| in Debye.
    pub dipole_debye: f64,
    /// Transition wavelength λ_q, m.
    pub wavelength_q: f64,
    /// If set, used for γ_q directly (rad/s) instead of the radiative value
    /// derived from the dipole moment. Experiments quote γ_q directly.
    pub gamma_override: Option<f64>,
}

impl EmitterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dipole_debye > 0.0) {
            return Err(Error::Validation(format!(
                "dipole_debye must be positive, got {}",
                self.dipole_debye
            )));
        }
        if !(self.wavelength_q > 0.0) {
            return Err(Error::Validation(format!(
                "wavelength_q must be positive, got {}",
                self.wavelength_q
            )));
        }
        if let Some(g) = self.gamma_override {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::Validation(format!(
                    "gamma_override must be a finite non-negative rate, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// All angular rates of the coupled system in one validated record.
///
/// `h` is the complex intermode backscattering amplitude between the two
/// counter-propagating resonator modes; `chirality_d` is the optical
/// chirality D ∈ [−1, 1] that fixes how the emitter coupling `g` splits
/// between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Resonator angular frequency ω_c, rad/s.
    pub omega_c: f64,
    /// Emitter angular frequency ω_q, rad/s.
    pub omega_q: f64,
    /// Intrinsic resonator decay κ_i, rad/s.
    pub kappa_i: f64,
    /// External (waveguide) decay κ_ex, rad/s.
    pub kappa_ex: f64,
    /// Emitter decay γ_q, rad/s.
    pub gamma_q: f64,
    /// Emitter–resonator coupling g, rad/s.
    pub g: f64,
    /// Intermode backscattering amplitude, rad/s (complex).
    pub h: C64,
    /// Optical chirality D ∈ [−1, 1].
    pub chirality_d: f64,
}

impl SystemParams {
    pub fn new(
        omega_c: f64,
        omega_q: f64,
        kappa_i: f64,
        kappa_ex: f64,
        gamma_q: f64,
        g: f64,
        h: C64,
        chirality_d: f64,
    ) -> Result<Self> {
        let p = Self { omega_c, omega_q, kappa_i, kappa_ex, gamma_q, g, h, chirality_d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_c,
            self.omega_q,
            self.kappa_i,
            self.kappa_ex,
            self.gamma_q,
            self.g,
            self.h.re,
            self.h.im,
            self.chirality_d,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("all system parameters must be finite".into()));
        }
        for (name, v) in [
            ("kappa_i", self.kappa_i),
            ("kappa_ex", self.kappa_ex),
            ("gamma_q", self.gamma_q),
            ("g", self.g),
        ] {
            if v < 0.0 {
                return Err(Error::Validation(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.chirality_d.abs() > 1.0 {
            return Err(Error::Validation(format!(
                "chirality_d must lie in [-1, 1], got {}",
                self.chirality_d
            )));
        }
        Ok(())
    }

    /// Total resonator decay κ = κ_i + κ_ex.
    pub fn kappa_total(&self) -> f64 {
        self.kappa_i + self.kappa_ex
    }
}

/// Parameters of the polarization-selective optical Stark drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkSpec {
    /// Drive Rabi frequency Ω_s, rad/s.
    pub rabi: f64,
    /// Drive detuning Δ_s from the shifted transition, rad/s (nonzero).
    pub detuning: f64,
    /// Base detuning Δ_c of the counter-polarized transition, rad/s.
    pub base_detuning: f64,
}

/// Zero-point field amplitude E_0 = sqrt(ħ ω_c / 2 ε_0 V_m), V/m.
pub fn zero_point_field(omega_c: f64, mode_volume: f64) -> Result<f64> {
    if !(omega_c > 0.0) || !(mode_volume > 0.0) {
        return Err(Error::Domain(format!(
            "zero_point_field needs positive inputs, got omega_c = {omega_c}, mode_volume = {mode_volume}"
        )));
    }
    Ok((HBAR * omega_c / (2.0 * EPS0 * mode_volume)).sqrt())
}

/// Emitter–mode coupling rate g = |d| E_0 / ħ, rad/s, for a dipole moment
/// given in Debye.
pub fn coupling_strength(dipole_debye: f64, e0: f64) -> Result<f64> {
    if !(dipole_debye > 0.0) || !(e0 > 0.0) {
        return Err(Error::Domain(format!(
            "coupling_strength needs positive inputs, got dipole_debye = {dipole_debye}, e0 = {e0}"
        )));
    }
    Ok(dipole_debye * DEBYE * e0 / HBAR)
}

/// Free-space radiative decay rate γ_q = |d|² ω_q³ / (3π ε_0 ħ c³), rad/s.
///
/// Cubic in ω_q: the quadratic form sometimes quoted is inconsistent both
/// dimensionally and with the reference numbers, so it is not used.
pub fn spontaneous_rate(dipole_debye: f64, omega_q: f64) -> Result<f64> {
    if !(dipole_debye > 0.0) || !(omega_q > 0.0) {
        return Err(Error::Domain(format!(
            "spontaneous_rate needs positive inputs, got dipole_debye = {dipole_debye}, omega_q = {omega_q}"
        )));
    }
    let d = dipole_debye * DEBYE;
    Ok(d * d * omega_q.powi(3) / (3.0 * PI * EPS0 * HBAR * C_LIGHT.powi(3)))
}

/// Intrinsic decay from the quality factor: κ_i = ω_c / Q_in.
pub fn kappa_from_q(omega_c: f64, q_intrinsic: f64) -> Result<f64> {
    if !(omega_c > 0.0) {
        return Err(Error::Domain(format!("kappa_from_q needs omega_c > 0, got {omega_c}")));
    }
    if !(q_intrinsic > 1.0) {
        return Err(Error::Domain(format!(
            "kappa_from_q needs q_intrinsic > 1, got {q_intrinsic}"
        )));
    }
    Ok(omega_c / q_intrinsic)
}

/// Optical Stark shift Δ_OSE = 2 Ω_s² / Δ_s and the resulting detuning
/// Δ_− = Δ_c + 2 Δ_OSE of the counter-polarized transition.
pub fn stark_shift(spec: &StarkSpec) -> Result<(f64, f64)> {
    if spec.detuning == 0.0 || !spec.detuning.is_finite() {
        return Err(Error::Domain(format!(
            "stark_shift needs a nonzero finite drive detuning, got {}",
            spec.detuning
        )));
    }
    let delta_ose = 2.0 * spec.rabi * spec.rabi / spec.detuning;
    let delta_minus = spec.base_detuning + 2.0 * delta_ose;
    Ok((delta_ose, delta_minus))
}

/// Compose the resonator and emitter specs into a full [`SystemParams`].
///
/// ω = 2πc/λ on both sides; `gamma_override` wins over the radiative rate
/// when present.
pub fn resolve(
    resonator: &ResonatorSpec,
    emitter: &EmitterSpec,
    h: C64,
    chirality_d: f64,
) -> Result<SystemParams> {
    resonator.validate()?;
    emitter.validate()?;
    let omega_c = 2.0 * PI * C_LIGHT / resonator.wavelength_c;
    let omega_q = 2.0 * PI * C_LIGHT / emitter.wavelength_q;
    let kappa_i = kappa_from_q(omega_c, resonator.q_intrinsic)?;
    let kappa_ex = resonator.kappa_ex_ratio * kappa_i;
    let e0 = zero_point_field(omega_c, resonator.mode_volume)?;
    let g = coupling_strength(emitter.dipole_debye, e0)?;
    let gamma_q = match emitter.gamma_override {
        Some(v) => v,
        None => spontaneous_rate(emitter.dipole_debye, omega_q)?,
    };
    SystemParams::new(omega_c, omega_q, kappa_i, kappa_ex, gamma_q, g, h, chirality_d)
}

/// Convenience: rad/s for a rate quoted as X in the 2π × X GHz convention.
pub fn ghz(x: f64) -> f64 {
    2.0 * PI * x * 1e9
}
