//! Fixed-step classical fourth-order Runge-Kutta over complex state
//! vectors, shared by the time-domain modules.
//!
//! The systems integrated here are linear and non-stiff once the step
//! bound dt ≤ min(0.02/κ, 0.02/g, 0.1/(v_g k_max)) holds, so a fixed step
//! with a convergence gate beats an adaptive scheme on determinism.

use crate::{C64, Error, Result};

/// Scratch buffers for an RK4 step of dimension `dim`.
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    stage: Vec<C64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let zero = vec![C64::new(0.0, 0.0); dim];
        Self { k1: zero.clone(), k2: zero.clone(), k3: zero.clone(), k4: zero.clone(), stage: zero }
    }

    /// Advance `y` by one step of size `dt`. `rhs(t, y, dy)` writes the time
    /// derivative of `y` into `dy`.
    pub fn step<F>(&mut self, t: f64, dt: f64, y: &mut [C64], rhs: &mut F)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        debug_assert_eq!(n, self.k1.len());
        rhs(t, y, &mut self.k1);
        for i in 0..n {
            self.stage[i] = y[i] + 0.5 * dt * self.k1[i];
        }
        rhs(t + 0.5 * dt, &self.stage, &mut self.k2);
        for i in 0..n {
            self.stage[i] = y[i] + 0.5 * dt * self.k2[i];
        }
        rhs(t + 0.5 * dt, &self.stage, &mut self.k3);
        for i in 0..n {
            self.stage[i] = y[i] + dt * self.k3[i];
        }
        rhs(t + dt, &self.stage, &mut self.k4);
        let w = dt / 6.0;
        for i in 0..n {
            y[i] += w * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Fail with a diagnostic if any component went non-finite.
pub fn check_finite(t: f64, y: &[C64], context: &str) -> Result<()> {
    for (i, v) in y.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite {
                t,
                context: format!("{context}: component {i} is {v}"),
            });
        }
    }
    Ok(())
}
