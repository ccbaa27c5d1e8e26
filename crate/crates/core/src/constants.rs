//! Physical constants, pinned so that every derived rate is reproducible.
//!
//! CODATA 2018 values. All SI.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_8128e-12;

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 2.997_924_58e8;

/// One Debye in C·m.
pub const DEBYE: f64 = 3.335_64e-30;

/// The same constants as one validated record, for callers that want to
/// carry them explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Vacuum permittivity, F/m.
    pub eps0: f64,
    /// Speed of light, m/s.
    pub c_light: f64,
    /// Debye unit, C·m.
    pub debye: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: HBAR, eps0: EPS0, c_light: C_LIGHT, debye: DEBYE }
    }
}

impl PhysicalConstants {
    /// All constants must be strictly positive.
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("eps0", self.eps0),
            ("c_light", self.c_light),
            ("debye", self.debye),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(crate::Error::Validation(format!(
                    "physical constant {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
