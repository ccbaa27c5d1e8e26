//! Unidirectional single-photon emission.
//!
//! An initially excited emitter deposits its excitation into the two
//! counter-propagating resonator modes according to the chiral coupling
//! split, and the waveguide collects it port-resolved. In the
//! single-excitation sector the dynamics reduce exactly to linear amplitude
//! equations:
//!
//!   ė_q = −γ_q e_q − i (g_a* e_a + g_b* e_b)
//!   ė_a = −(κ_i + κ_ex) e_a − i g_a e_q − i h e_b
//!   ė_b = −(κ_i + κ_ex) e_b − i g_b e_q − i h* e_a
//!
//! A σ−-polarized dipole exchanges the roles of g_a and g_b. Mode
//! amplitudes decay at κ_i + κ_ex, intensities at twice that, and the
//! waveguide flux per mode is 2 κ_ex |e|²; this is the convention under
//! which a bare decaying cavity delivers exactly κ_ex/(κ_ex + κ_i) to the
//! waveguide. Port routing is fixed by the geometry: the CCW mode (a)
//! leaves through port 2, the CW mode (b) through port 1.
//!
//! The port collections and the loss integral are carried as extra ODE
//! components through the same RK4 kernel, so the excitation budget closes
//! to integrator accuracy rather than quadrature accuracy.

use crate::chirality::split_coupling;
use crate::integrate::{check_finite, Rk4};
use crate::params::SystemParams;
use crate::{C64, Error, IncompleteRun, Result};

/// Residual excitation allowed at the end of a complete emission run.
pub const RESIDUAL_THRESHOLD: f64 = 1e-4;

/// Which circular dipole transition the emitter was prepared in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    SigmaPlus,
    SigmaMinus,
}

/// Initial emitter preparation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleInit {
    pub polarization: Polarization,
    /// Initial excitation probability, in (0, 1].
    pub initial_excitation: f64,
}

impl DipoleInit {
    pub fn sigma_plus() -> Self {
        Self { polarization: Polarization::SigmaPlus, initial_excitation: 1.0 }
    }

    pub fn sigma_minus() -> Self {
        Self { polarization: Polarization::SigmaMinus, initial_excitation: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_excitation > 0.0 && self.initial_excitation <= 1.0) {
            return Err(Error::Validation(format!(
                "initial_excitation must lie in (0, 1], got {}",
                self.initial_excitation
            )));
        }
        Ok(())
    }
}

/// Time series of an emission run.
#[derive(Debug, Clone)]
pub struct EmissionTrace {
    /// Sample times, s.
    pub times: Vec<f64>,
    /// Emitter excitation |e_q|².
    pub e_q2: Vec<f64>,
    /// CCW mode excitation |e_a|².
    pub e_a2: Vec<f64>,
    /// CW mode excitation |e_b|².
    pub e_b2: Vec<f64>,
    /// Photon flux into port 1 (from the CW mode), 1/s.
    pub flux_port1: Vec<f64>,
    /// Photon flux into port 2 (from the CCW mode), 1/s.
    pub flux_port2: Vec<f64>,
    /// Cumulative collection at port 1.
    pub n_port1: Vec<f64>,
    /// Cumulative collection at port 2.
    pub n_port2: Vec<f64>,
    /// Cumulative intrinsic + emitter loss.
    pub n_loss: Vec<f64>,
    /// Total excitation placed in the system at t = 0.
    pub initial_excitation: f64,
    /// Set when the residual at t_end exceeded [`RESIDUAL_THRESHOLD`].
    pub warning: Option<IncompleteRun>,
}

impl EmissionTrace {
    /// Excitation still inside the system at sample `i`.
    pub fn residual(&self, i: usize) -> f64 {
        self.e_q2[i] + self.e_a2[i] + self.e_b2[i]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Default integrator step for `params`: min(0.02/κ, 0.02/g).
pub fn default_step(params: &SystemParams) -> f64 {
    let mut dt = f64::INFINITY;
    let kappa = params.kappa_total();
    if kappa > 0.0 {
        dt = dt.min(0.02 / kappa);
    }
    if params.g > 0.0 {
        dt = dt.min(0.02 / params.g);
    }
    if params.gamma_q > 0.0 {
        dt = dt.min(0.02 / params.gamma_q);
    }
    let h = params.h.norm();
    if h > 0.0 {
        dt = dt.min(0.02 / h);
    }
    dt
}

// State layout for the integrator.
const EQ: usize = 0;
const EA: usize = 1;
const EB: usize = 2;
const N1: usize = 3;
const N2: usize = 4;
const NL: usize = 5;
const DIM: usize = 6;

/// Integrate the emission dynamics from an excited emitter.
pub fn evolve_emission(
    params: &SystemParams,
    dipole: &DipoleInit,
    t_end: f64,
    dt: f64,
) -> Result<EmissionTrace> {
    params.validate()?;
    dipole.validate()?;
    let split = split_coupling(params.g, params.chirality_d)?;
    // σ− drives the conjugate transition: the mode roles exchange.
    let (g_a, g_b) = match dipole.polarization {
        Polarization::SigmaPlus => (split.g_a, split.g_b),
        Polarization::SigmaMinus => (split.g_b, split.g_a),
    };
    let mut y = [C64::new(0.0, 0.0); DIM];
    y[EQ] = C64::new(dipole.initial_excitation.sqrt(), 0.0);
    run(params, g_a, g_b, y, dipole.initial_excitation, t_end, dt)
}

/// Integrate a bare decaying cavity: the CCW mode preloaded with
/// `initial_excitation`, the emitter decoupled. Reference run for the
/// closed-form waveguide collection κ_ex/(κ_ex + κ_i).
pub fn evolve_bare_cavity(
    params: &SystemParams,
    initial_excitation: f64,
    t_end: f64,
    dt: f64,
) -> Result<EmissionTrace> {
    params.validate()?;
    if !(initial_excitation > 0.0 && initial_excitation <= 1.0) {
        return Err(Error::Validation(format!(
            "initial_excitation must lie in (0, 1], got {initial_excitation}"
        )));
    }
    let zero = C64::new(0.0, 0.0);
    let mut y = [zero; DIM];
    y[EA] = C64::new(initial_excitation.sqrt(), 0.0);
    run(params, zero, zero, y, initial_excitation, t_end, dt)
}

fn run(
    params: &SystemParams,
    g_a: C64,
    g_b: C64,
    mut y: [C64; DIM],
    initial_excitation: f64,
    t_end: f64,
    dt: f64,
) -> Result<EmissionTrace> {
    if !(t_end > 0.0) || !(dt > 0.0) || !t_end.is_finite() || !dt.is_finite() {
        return Err(Error::Config(format!(
            "emission run needs positive finite t_end and dt, got t_end = {t_end}, dt = {dt}"
        )));
    }
    let n_steps = (t_end / dt).ceil() as usize;
    if n_steps > 100_000_000 {
        return Err(Error::Config(format!(
            "emission run would take {n_steps} steps; raise dt or lower t_end"
        )));
    }
    let i = C64::new(0.0, 1.0);
    let kappa = params.kappa_total();
    let (kappa_i, kappa_ex, gamma_q, h) = (params.kappa_i, params.kappa_ex, params.gamma_q, params.h);
    let mut rhs = move |_t: f64, y: &[C64], dy: &mut [C64]| {
        let (eq, ea, eb) = (y[EQ], y[EA], y[EB]);
        dy[EQ] = -gamma_q * eq - i * (g_a.conj() * ea + g_b.conj() * eb);
        dy[EA] = -kappa * ea - i * g_a * eq - i * h * eb;
        dy[EB] = -kappa * eb - i * g_b * eq - i * h.conj() * ea;
        let (a2, b2, q2) = (ea.norm_sqr(), eb.norm_sqr(), eq.norm_sqr());
        dy[N1] = C64::new(2.0 * kappa_ex * b2, 0.0);
        dy[N2] = C64::new(2.0 * kappa_ex * a2, 0.0);
        dy[NL] = C64::new(2.0 * kappa_i * (a2 + b2) + 2.0 * gamma_q * q2, 0.0);
    };

    let mut trace = EmissionTrace {
        times: Vec::with_capacity(n_steps + 1),
        e_q2: Vec::with_capacity(n_steps + 1),
        e_a2: Vec::with_capacity(n_steps + 1),
        e_b2: Vec::with_capacity(n_steps + 1),
        flux_port1: Vec::with_capacity(n_steps + 1),
        flux_port2: Vec::with_capacity(n_steps + 1),
        n_port1: Vec::with_capacity(n_steps + 1),
        n_port2: Vec::with_capacity(n_steps + 1),
        n_loss: Vec::with_capacity(n_steps + 1),
        initial_excitation,
        warning: None,
    };
    let record = |t: f64, y: &[C64; DIM], trace: &mut EmissionTrace| {
        trace.times.push(t);
        trace.e_q2.push(y[EQ].norm_sqr());
        trace.e_a2.push(y[EA].norm_sqr());
        trace.e_b2.push(y[EB].norm_sqr());
        trace.flux_port1.push(2.0 * kappa_ex * y[EB].norm_sqr());
        trace.flux_port2.push(2.0 * kappa_ex * y[EA].norm_sqr());
        trace.n_port1.push(y[N1].re);
        trace.n_port2.push(y[N2].re);
        trace.n_loss.push(y[NL].re);
    };

    let mut rk = Rk4::new(DIM);
    record(0.0, &y, &mut trace);
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let step_dt = dt.min(t_end - t);
        rk.step(t, step_dt, &mut y, &mut rhs);
        record(t + step_dt, &y, &mut trace);
    }
    check_finite(t_end, &y, "emission state")?;

    let residual = trace.residual(trace.len() - 1);
    if residual >= RESIDUAL_THRESHOLD {
        trace.warning = Some(IncompleteRun { residual, threshold: RESIDUAL_THRESHOLD });
    }
    Ok(trace)
}

/// Total photon number collected in the waveguide over the trace:
/// n_port1 + n_port2 at the final sample. Any incomplete-run warning stays
/// attached to the trace.
pub fn waveguide_collection(trace: &EmissionTrace) -> f64 {
    let last = trace.len() - 1;
    trace.n_port1[last] + trace.n_port2[last]
}

/// Port-resolved collection and the directionality figure of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directionality {
    pub n_port1: f64,
    pub n_port2: f64,
    /// (n_port2 − n_port1)/(n_port2 + n_port1) ∈ [−1, 1].
    pub directionality: f64,
}

pub fn directionality(trace: &EmissionTrace) -> Result<Directionality> {
    let last = trace.len() - 1;
    let (n1, n2) = (trace.n_port1[last], trace.n_port2[last]);
    let total = n1 + n2;
    if total == 0.0 {
        return Err(Error::Domain("directionality undefined: nothing was collected".into()));
    }
    Ok(Directionality { n_port1: n1, n_port2: n2, directionality: (n2 - n1) / total })
}

/// Closed-form waveguide collection of a bare decaying cavity:
/// κ_ex / (κ_ex + κ_i).
pub fn bare_cavity_collection(kappa_ex: f64, kappa_i: f64) -> Result<f64> {
    if !(kappa_ex >= 0.0) || !(kappa_i >= 0.0) {
        return Err(Error::Domain(format!(
            "decay rates must be non-negative, got kappa_ex = {kappa_ex}, kappa_i = {kappa_i}"
        )));
    }
    let total = kappa_ex + kappa_i;
    if total == 0.0 {
        return Err(Error::Domain("bare_cavity_collection needs kappa_ex + kappa_i > 0".into()));
    }
    Ok(kappa_ex / total)
}

/// Count local maxima of a flux series, ignoring ripples below
/// `floor_frac` of the global peak.
pub fn count_flux_peaks(flux: &[f64], floor_frac: f64) -> usize {
    let peak = flux.iter().cloned().fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return 0;
    }
    let floor = floor_frac * peak;
    flux.windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] >= floor)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ghz;
    use approx::assert_abs_diff_eq;

    /// Fast-cavity collection setup: κ_ex = 10 κ_i, g fixed at the design
    /// coupling, D = −1.
    fn overcoupled() -> SystemParams {
        let kappa_i = ghz(4.94);
        SystemParams::new(
            ghz(192.67e3),
            ghz(192.67e3),
            kappa_i,
            10.0 * kappa_i,
            1e-3 * kappa_i,
            ghz(6.86),
            C64::new(0.0, 0.0),
            -1.0,
        )
        .unwrap()
    }

    /// Strong-coupling (time-bin) setup: κ_i ten times smaller, κ_ex = 5 κ_i.
    fn strong_coupling() -> SystemParams {
        let kappa_i = ghz(0.494);
        SystemParams::new(
            ghz(192.67e3),
            ghz(192.67e3),
            kappa_i,
            5.0 * kappa_i,
            1e-3 * kappa_i,
            ghz(6.86),
            C64::new(0.0, 0.0),
            -1.0,
        )
        .unwrap()
    }

    #[test]
    fn overcoupled_collection_and_direction() {
        let p = overcoupled();
        let t_end = 40.0 / p.kappa_i;
        let trace =
            evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, default_step(&p)).unwrap();
        assert!(trace.warning.is_none(), "residual {:?}", trace.warning);
        let collected = waveguide_collection(&trace);
        assert_abs_diff_eq!(collected, 0.91, epsilon = 0.01);
        let d = directionality(&trace).unwrap();
        assert_abs_diff_eq!(d.directionality, 1.0, epsilon = 1e-12);
        assert_eq!(d.n_port1, 0.0);
    }

    #[test]
    fn strong_coupling_time_bin_emission() {
        let p = strong_coupling();
        let t_end = 8.0 / p.kappa_i;
        let trace =
            evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, default_step(&p)).unwrap();
        assert!(trace.warning.is_none());
        assert_abs_diff_eq!(waveguide_collection(&trace), 0.83, epsilon = 0.01);
        // Vacuum Rabi oscillation splits the flux into time bins at period
        // ≈ π/g.
        let peaks = count_flux_peaks(&trace.flux_port2, 1e-3);
        assert!(peaks >= 2, "found {peaks} flux maxima");
        let idx: Vec<usize> = trace
            .flux_port2
            .windows(3)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] && w[1] > w[2])
            .map(|(i, _)| i + 1)
            .collect();
        let spacing = trace.times[idx[1]] - trace.times[idx[0]];
        let expect = std::f64::consts::PI / p.g;
        assert_abs_diff_eq!(spacing / expect, 1.0, epsilon = 0.2);
    }

    #[test]
    fn decoupled_emitter_emits_nothing_into_the_resonator() {
        let mut p = overcoupled();
        p.g = 0.0;
        p.gamma_q = ghz(0.1);
        let t_end = 120.0 / p.gamma_q;
        let trace = evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, 0.002 / p.gamma_q)
            .unwrap();
        assert_eq!(waveguide_collection(&trace), 0.0);
        // Emitter decays at γ_q: |e_q(t)|² = e^{−2 γ_q t}.
        let mid = trace.len() / 2;
        let expect = (-2.0 * p.gamma_q * trace.times[mid]).exp();
        assert_abs_diff_eq!(trace.e_q2[mid], expect, epsilon = 1e-6);
        assert!(directionality(&trace).is_err());
    }

    #[test]
    fn excitation_budget_closes_at_every_sample() {
        let mut p = strong_coupling();
        p.h = C64::from_polar(0.5 * p.kappa_i, 1.2);
        p.chirality_d = -0.7;
        let t_end = 10.0 / p.kappa_i;
        let trace =
            evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, default_step(&p)).unwrap();
        for i in 0..trace.len() {
            let budget =
                trace.n_port1[i] + trace.n_port2[i] + trace.n_loss[i] + trace.residual(i);
            assert_abs_diff_eq!(budget, trace.initial_excitation, epsilon = 1e-4);
        }
    }

    #[test]
    fn polarization_swap_exchanges_ports_exactly() {
        let mut p = strong_coupling();
        p.chirality_d = -0.8;
        let t_end = 8.0 / p.kappa_i;
        let dt = default_step(&p);
        let plus = evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, dt).unwrap();
        let minus = evolve_emission(&p, &DipoleInit::sigma_minus(), t_end, dt).unwrap();
        assert_eq!(plus.e_a2, minus.e_b2);
        assert_eq!(plus.e_b2, minus.e_a2);
        assert_eq!(plus.n_port1, minus.n_port2);
        assert_eq!(plus.n_port2, minus.n_port1);
        assert_eq!(plus.e_q2, minus.e_q2);
    }

    #[test]
    fn symmetric_split_is_directionless() {
        let mut p = strong_coupling();
        p.chirality_d = 0.0;
        let t_end = 8.0 / p.kappa_i;
        let trace =
            evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, default_step(&p)).unwrap();
        let d = directionality(&trace).unwrap();
        assert_abs_diff_eq!(d.directionality, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bare_cavity_run_matches_closed_form() {
        for (kex_frac, expect) in [(10.0, 10.0 / 11.0), (5.0, 5.0 / 6.0), (0.0, 0.0)] {
            let kappa_i = ghz(4.94);
            let p = SystemParams::new(
                ghz(192.67e3),
                ghz(192.67e3),
                kappa_i,
                kex_frac * kappa_i,
                0.0,
                0.0,
                C64::new(0.0, 0.0),
                -1.0,
            )
            .unwrap();
            let t_end = 12.0 / p.kappa_i;
            let trace = evolve_bare_cavity(&p, 1.0, t_end, default_step(&p)).unwrap();
            let closed = bare_cavity_collection(p.kappa_ex, p.kappa_i).unwrap();
            assert_abs_diff_eq!(waveguide_collection(&trace), closed, epsilon = 1e-4);
            assert_abs_diff_eq!(closed, expect, epsilon = 1e-15);
        }
        assert!(bare_cavity_collection(0.0, 0.0).is_err());
    }

    #[test]
    fn incomplete_run_carries_warning() {
        let p = strong_coupling();
        let trace =
            evolve_emission(&p, &DipoleInit::sigma_plus(), 0.2 / p.kappa_i, default_step(&p))
                .unwrap();
        let w = trace.warning.expect("short run must flag residual");
        assert!(w.residual > RESIDUAL_THRESHOLD);
    }

    #[test]
    fn step_halving_leaves_totals_unchanged() {
        let p = strong_coupling();
        let t_end = 8.0 / p.kappa_i;
        let dt = default_step(&p);
        let a = evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, dt).unwrap();
        let b = evolve_emission(&p, &DipoleInit::sigma_plus(), t_end, dt / 2.0).unwrap();
        assert_abs_diff_eq!(
            waveguide_collection(&a),
            waveguide_collection(&b),
            epsilon = 1e-4
        );
    }
}
