//! Time-domain propagation of single-photon wavepackets through the
//! resonator–emitter system, in k-space.
//!
//! Each waveguide direction is a band of modes with linearized dispersion
//! around its carrier; the envelope wavenumber q = k ∓ k_0 runs over a
//! symmetric grid. Right-movers couple to the CCW mode a, left-movers to
//! the CW mode b, and the emitter couples to both modes through the chiral
//! split (g_a, g_b):
//!
//!   ċ_q = −i v_g q c_q − i Ṽ e_a
//!   ḋ_q = +i v_g q d_q − i Ṽ e_b
//!   ė_a = −κ_i e_a − i Ṽ Σ_q c_q − i g_a e_q
//!   ė_b = −κ_i e_b − i Ṽ Σ_q d_q − i g_b e_q
//!   ė_q = (iΔ_q0 − γ_q) e_q − i (g_a e_a + g_b e_b)
//!
//! with the pulse carrier pinned to the resonator line (Δ_q0 = ω_c − ω_q).
//! The per-mode coupling Ṽ = V sqrt(dk / 2π) with V = sqrt(2 κ_ex v_g)
//! realizes the continuum decay relation κ_ex = V²/(2 v_g) on the discrete
//! grid; a numerical decay test pins the calibration.
//!
//! Intermode backscattering has no channel in this band picture; runs
//! requesting h ≠ 0 are rejected (steady-state transport handles h).
//!
//! Mode amplitudes are stored so that Σ|c_q|² is the channel probability
//! directly; the continuum wavefunction is c_q / sqrt(dk).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::chirality::split_coupling;
use crate::integrate::{check_finite, Rk4};
use crate::params::SystemParams;
use crate::{C64, Error, IncompleteRun, Result};

/// Residual internal excitation allowed at the end of a complete run.
pub const RESIDUAL_THRESHOLD: f64 = 1e-6;

/// Required ratio of the grid's Nyquist wavenumber to the pulse bandwidth.
pub const NYQUIST_MARGIN: f64 = 8.0;

/// Symmetric envelope-wavenumber grid for one waveguide direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    /// Modes per direction; a power of two.
    pub n_modes: usize,
    /// Mode spacing dk = 2π / domain_length.
    pub dk: f64,
    /// Carrier wavenumber k_0 (bookkeeping; the dynamics uses q = k ∓ k_0).
    pub k0: f64,
    /// Periodic domain length.
    pub domain_length: f64,
    /// Group velocity (1 in simulation units).
    pub v_g: f64,
}

impl KGrid {
    pub fn new(n_modes: usize, domain_length: f64, v_g: f64, k0: f64) -> Result<Self> {
        if n_modes < 4 || !n_modes.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_modes must be a power of two (>= 4), got {n_modes}"
            )));
        }
        if !(domain_length > 0.0) || !domain_length.is_finite() {
            return Err(Error::Config(format!(
                "domain_length must be positive, got {domain_length}"
            )));
        }
        if !(v_g > 0.0) || !v_g.is_finite() {
            return Err(Error::Config(format!("v_g must be positive, got {v_g}")));
        }
        Ok(Self { n_modes, dk: 2.0 * PI / domain_length, k0, domain_length, v_g })
    }

    /// Envelope wavenumber of mode index i: q_i = (i − n/2) dk.
    pub fn q(&self, i: usize) -> f64 {
        (i as f64 - (self.n_modes / 2) as f64) * self.dk
    }

    /// Largest represented |q|.
    pub fn k_max(&self) -> f64 {
        (self.n_modes / 2) as f64 * self.dk
    }

    /// Grid spacing in position space.
    pub fn dx(&self) -> f64 {
        self.domain_length / self.n_modes as f64
    }

    /// Position of grid point j: x_j = −L/2 + j dx.
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.domain_length + j as f64 * self.dx()
    }

    /// Index of the mode with wavenumber −q_i, when it exists.
    pub fn mirror(&self, i: usize) -> Option<usize> {
        (i >= 1).then(|| self.n_modes - i)
    }
}

/// Dual-sided Gaussian pulse description.
///
/// `tau_p` is the pulse duration; the spectral amplitude has standard
/// deviation σ_ω = 1/τ_p, so a stated bandwidth σ_ω maps to τ_p = 1/σ_ω.
/// `amplitude_split` holds the norm fraction carried by each side
/// (left-incident right-mover first); the fractions must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub tau_p: f64,
    /// Initial center of the right-moving pulse (left of the resonator).
    pub x0_left: f64,
    /// Initial center of the left-moving pulse (right of the resonator).
    pub x0_right: f64,
    /// Norm fractions (left input, right input).
    pub amplitude_split: (f64, f64),
}

impl PulseSpec {
    /// Symmetric dual input at ±offset.
    pub fn dual(tau_p: f64, offset: f64) -> Self {
        Self { tau_p, x0_left: -offset, x0_right: offset, amplitude_split: (0.5, 0.5) }
    }

    /// Single forward input.
    pub fn forward_only(tau_p: f64, offset: f64) -> Self {
        Self { tau_p, x0_left: -offset, x0_right: offset, amplitude_split: (1.0, 0.0) }
    }

    /// Single backward input.
    pub fn backward_only(tau_p: f64, offset: f64) -> Self {
        Self { tau_p, x0_left: -offset, x0_right: offset, amplitude_split: (0.0, 1.0) }
    }

    /// Pulse duration for a spectral amplitude bandwidth σ_ω.
    pub fn tau_from_bandwidth(sigma_omega: f64) -> f64 {
        1.0 / sigma_omega
    }
}

/// Full system state at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketState {
    /// Right-moving mode amplitudes, natural q order.
    pub phi_c: Vec<C64>,
    /// Left-moving mode amplitudes, natural q order.
    pub phi_d: Vec<C64>,
    pub e_a: C64,
    pub e_b: C64,
    pub e_q: C64,
    pub t: f64,
}

impl WavepacketState {
    pub fn vacuum(grid: &KGrid) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self {
            phi_c: vec![zero; grid.n_modes],
            phi_d: vec![zero; grid.n_modes],
            e_a: zero,
            e_b: zero,
            e_q: zero,
            t: 0.0,
        }
    }

    /// Probability in the right-moving channel.
    pub fn norm_c(&self) -> f64 {
        self.phi_c.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability in the left-moving channel.
    pub fn norm_d(&self) -> f64 {
        self.phi_d.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability held by the resonator modes and the emitter.
    pub fn norm_internal(&self) -> f64 {
        self.e_a.norm_sqr() + self.e_b.norm_sqr() + self.e_q.norm_sqr()
    }

    pub fn total_norm(&self) -> f64 {
        self.norm_c() + self.norm_d() + self.norm_internal()
    }
}

/// Unitary-scaled transforms between the position grid and the mode grid.
pub struct Transform {
    grid: KGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transform {
    pub fn new(grid: &KGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            forward: planner.plan_fft_forward(grid.n_modes),
            inverse: planner.plan_fft_inverse(grid.n_modes),
        }
    }

    /// Position samples φ(x_j) → mode amplitudes c_q (natural q order),
    /// scaled so that Σ_q |c_q|² = Σ_j |φ(x_j)|² dx.
    pub fn to_modes(&self, position: &[C64]) -> Vec<C64> {
        let n = self.grid.n_modes;
        assert_eq!(position.len(), n);
        let mut buf = position.to_vec();
        self.forward.process(&mut buf);
        let scale = self.grid.dx() * (self.grid.dk / (2.0 * PI)).sqrt();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, slot) in out.iter_mut().enumerate() {
            let m = i as isize - (n / 2) as isize;
            let bin = (i + n / 2) % n;
            let sign = if m & 1 == 0 { 1.0 } else { -1.0 };
            *slot = buf[bin] * (sign * scale);
        }
        out
    }

    /// Mode amplitudes → position samples φ(x_j); inverse of
    /// [`Self::to_modes`].
    pub fn to_position(&self, modes: &[C64]) -> Vec<C64> {
        let n = self.grid.n_modes;
        assert_eq!(modes.len(), n);
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (i, v) in modes.iter().enumerate() {
            let m = i as isize - (n / 2) as isize;
            let bin = (i + n / 2) % n;
            let sign = if m & 1 == 0 { 1.0 } else { -1.0 };
            buf[bin] = v * sign;
        }
        self.inverse.process(&mut buf);
        let scale = (self.grid.dk / (2.0 * PI)).sqrt();
        for v in &mut buf {
            *v *= scale;
        }
        buf
    }
}

/// Per-mode waveguide coupling Ṽ realizing an external decay κ_ex on this
/// grid: Ṽ = sqrt(2 κ_ex v_g) · sqrt(dk / 2π).
pub fn per_mode_coupling(kappa_ex: f64, grid: &KGrid) -> f64 {
    (2.0 * kappa_ex * grid.v_g).sqrt() * (grid.dk / (2.0 * PI)).sqrt()
}

/// Integrator step bound: dt = min(0.02/κ, 0.02/g, 0.1/(v_g k_max)).
pub fn default_step(params: &SystemParams, grid: &KGrid) -> f64 {
    let mut dt = 0.1 / (grid.v_g * grid.k_max());
    let kappa = params.kappa_total();
    if kappa > 0.0 {
        dt = dt.min(0.02 / kappa);
    }
    if params.g > 0.0 {
        dt = dt.min(0.02 / params.g);
    }
    dt
}

/// Build the initial dual-Gaussian state in k-space from position-space
/// Gaussians of duration τ_p centered at the configured offsets.
pub fn init_dual_gaussian(grid: &KGrid, pulse: &PulseSpec) -> Result<WavepacketState> {
    let (w_left, w_right) = pulse.amplitude_split;
    if !(pulse.tau_p > 0.0) || !pulse.tau_p.is_finite() {
        return Err(Error::Config(format!("tau_p must be positive, got {}", pulse.tau_p)));
    }
    if w_left < 0.0 || w_right < 0.0 || (w_left + w_right - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "amplitude_split must be non-negative fractions summing to 1, got ({w_left}, {w_right})"
        )));
    }
    let width = grid.v_g * pulse.tau_p;
    if grid.k_max() * width < NYQUIST_MARGIN {
        return Err(Error::Config(format!(
            "grid does not resolve the pulse: k_max·v_g·tau_p = {:.2} < {NYQUIST_MARGIN}",
            grid.k_max() * width
        )));
    }
    let clearance = 4.0 * width;
    let half = 0.5 * grid.domain_length;
    for (w, x0, side, want_negative) in [
        (w_left, pulse.x0_left, "x0_left", true),
        (w_right, pulse.x0_right, "x0_right", false),
    ] {
        if w == 0.0 {
            continue;
        }
        let on_input_side = if want_negative { x0 <= -clearance } else { x0 >= clearance };
        if !on_input_side {
            return Err(Error::Config(format!(
                "{side} = {x0} puts the pulse inside the interaction region \
                 (need the center at least {clearance} away, on the input side)"
            )));
        }
        if x0.abs() + clearance >= half {
            return Err(Error::Config(format!(
                "{side} = {x0} leaves no room in the periodic domain of length {}",
                grid.domain_length
            )));
        }
    }

    let transform = Transform::new(grid);
    let gaussian = |x0: f64, weight: f64| -> Vec<C64> {
        // |φ|² integrates to `weight` over the line.
        let amp = weight.sqrt() * PI.powf(-0.25) / width.sqrt();
        (0..grid.n_modes)
            .map(|j| {
                let u = (grid.x(j) - x0) / width;
                C64::new(amp * (-0.5 * u * u).exp(), 0.0)
            })
            .collect()
    };
    let mut state = WavepacketState::vacuum(grid);
    if w_left > 0.0 {
        state.phi_c = transform.to_modes(&gaussian(pulse.x0_left, w_left));
    }
    if w_right > 0.0 {
        state.phi_d = transform.to_modes(&gaussian(pulse.x0_right, w_right));
    }
    Ok(state)
}

/// Time-stepping engine. Holds the flattened state and scratch buffers so
/// repeated steps allocate nothing.
pub struct Propagator {
    grid: KGrid,
    coupling: f64,
    g_a: f64,
    g_b: f64,
    kappa_i: f64,
    gamma_q: f64,
    delta_q0: f64,
    rk: Rk4,
    y: Vec<C64>,
    t: f64,
}

impl Propagator {
    /// Set up from a validated parameter record and an initial state.
    /// `coupling_v` overrides the per-mode coupling; by default it follows
    /// from κ_ex via [`per_mode_coupling`].
    pub fn new(
        params: &SystemParams,
        grid: &KGrid,
        initial: &WavepacketState,
        coupling_v: Option<f64>,
    ) -> Result<Self> {
        params.validate()?;
        if params.h != C64::new(0.0, 0.0) {
            return Err(Error::Config(
                "the k-space band model has no backscattering channel; set h = 0 \
                 (steady-state transport handles h != 0)"
                    .into(),
            ));
        }
        if initial.phi_c.len() != grid.n_modes || initial.phi_d.len() != grid.n_modes {
            return Err(Error::Config(format!(
                "state has {} + {} modes but the grid expects {} per direction",
                initial.phi_c.len(),
                initial.phi_d.len(),
                grid.n_modes
            )));
        }
        let split = split_coupling(params.g, params.chirality_d)?;
        let n = grid.n_modes;
        let mut y = Vec::with_capacity(2 * n + 3);
        y.extend_from_slice(&initial.phi_c);
        y.extend_from_slice(&initial.phi_d);
        y.push(initial.e_a);
        y.push(initial.e_b);
        y.push(initial.e_q);
        Ok(Self {
            grid: *grid,
            coupling: coupling_v.unwrap_or_else(|| per_mode_coupling(params.kappa_ex, grid)),
            g_a: split.g_a.re,
            g_b: split.g_b.re,
            kappa_i: params.kappa_i,
            gamma_q: params.gamma_q,
            delta_q0: params.omega_c - params.omega_q,
            rk: Rk4::new(2 * n + 3),
            y,
            t: initial.t,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// One RK4 step of size dt.
    pub fn step(&mut self, dt: f64) {
        let n = self.grid.n_modes;
        let (v_g, dk) = (self.grid.v_g, self.grid.dk);
        let half = (n / 2) as f64;
        let (vk, g_a, g_b) = (self.coupling, self.g_a, self.g_b);
        let (kappa_i, gamma_q, delta_q0) = (self.kappa_i, self.gamma_q, self.delta_q0);
        let mut rhs = move |_t: f64, y: &[C64], dy: &mut [C64]| {
            let (c, rest) = y.split_at(n);
            let (d, internal) = rest.split_at(n);
            let (e_a, e_b, e_q) = (internal[0], internal[1], internal[2]);
            let (dc, drest) = dy.split_at_mut(n);
            let (dd, dinternal) = drest.split_at_mut(n);

            let drive_c = C64::new(0.0, -1.0) * (vk * e_a);
            let drive_d = C64::new(0.0, -1.0) * (vk * e_b);
            let mut sum_c = C64::new(0.0, 0.0);
            let mut sum_d = C64::new(0.0, 0.0);
            for i in 0..n {
                let w = v_g * ((i as f64 - half) * dk);
                // ċ = −i v q c − i Ṽ e_a ; ḋ = +i v q d − i Ṽ e_b.
                dc[i] = C64::new(w * c[i].im, -w * c[i].re) + drive_c;
                dd[i] = C64::new(-w * d[i].im, w * d[i].re) + drive_d;
                sum_c += c[i];
                sum_d += d[i];
            }
            let i1 = C64::new(0.0, 1.0);
            dinternal[0] = -kappa_i * e_a - i1 * (vk * sum_c) - i1 * (g_a * e_q);
            dinternal[1] = -kappa_i * e_b - i1 * (vk * sum_d) - i1 * (g_b * e_q);
            dinternal[2] = C64::new(-gamma_q, delta_q0) * e_q - i1 * (g_a * e_a + g_b * e_b);
        };
        self.rk.step(self.t, dt, &mut self.y, &mut rhs);
        self.t += dt;
    }

    /// Copy the flattened state back out.
    pub fn state(&self) -> WavepacketState {
        let n = self.grid.n_modes;
        WavepacketState {
            phi_c: self.y[..n].to_vec(),
            phi_d: self.y[n..2 * n].to_vec(),
            e_a: self.y[2 * n],
            e_b: self.y[2 * n + 1],
            e_q: self.y[2 * n + 2],
            t: self.t,
        }
    }

    fn check_finite(&self) -> Result<()> {
        check_finite(self.t, &self.y, "wavepacket state")
    }
}

/// Single explicit step as a standalone operation.
pub fn step(
    state: &WavepacketState,
    params: &SystemParams,
    grid: &KGrid,
    coupling_v: f64,
    dt: f64,
) -> Result<WavepacketState> {
    let mut engine = Propagator::new(params, grid, state, Some(coupling_v))?;
    engine.step(dt);
    engine.check_finite()?;
    Ok(engine.state())
}

/// One row of the sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub norm_c: f64,
    pub norm_d: f64,
    pub e_a2: f64,
    pub e_b2: f64,
    pub e_q2: f64,
}

/// Position-space densities at one requested time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// |φ_+(x_j)|² per grid point.
    pub density_plus: Vec<f64>,
    /// |φ_−(x_j)|² per grid point.
    pub density_minus: Vec<f64>,
}

/// Run controls for [`propagate`].
#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    pub t_end: f64,
    /// Trajectory sampling interval.
    pub sample_interval: f64,
    /// Override the default integrator step.
    pub dt_override: Option<f64>,
    /// Times at which to record position-space snapshots.
    pub snapshot_times: Vec<f64>,
}

impl PropagateOptions {
    pub fn new(t_end: f64, sample_interval: f64) -> Self {
        Self { t_end, sample_interval, dt_override: None, snapshot_times: Vec::new() }
    }
}

/// Result of a propagation run.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub samples: Vec<TrajectorySample>,
    pub snapshots: Vec<Snapshot>,
    pub initial: WavepacketState,
    pub final_state: WavepacketState,
    /// Set when internal excitation at t_end exceeded [`RESIDUAL_THRESHOLD`].
    pub warning: Option<IncompleteRun>,
}

fn sample_of(state: &WavepacketState) -> TrajectorySample {
    TrajectorySample {
        t: state.t,
        norm_c: state.norm_c(),
        norm_d: state.norm_d(),
        e_a2: state.e_a.norm_sqr(),
        e_b2: state.e_b.norm_sqr(),
        e_q2: state.e_q.norm_sqr(),
    }
}

/// Propagate a dual Gaussian input through the system.
pub fn propagate(
    params: &SystemParams,
    grid: &KGrid,
    pulse: &PulseSpec,
    opts: &PropagateOptions,
) -> Result<Propagation> {
    let initial = init_dual_gaussian(grid, pulse)?;
    propagate_state(params, grid, initial, opts)
}

/// Propagate an arbitrary initial state.
pub fn propagate_state(
    params: &SystemParams,
    grid: &KGrid,
    initial: WavepacketState,
    opts: &PropagateOptions,
) -> Result<Propagation> {
    if !(opts.t_end > 0.0) || !opts.t_end.is_finite() {
        return Err(Error::Config(format!("t_end must be positive, got {}", opts.t_end)));
    }
    if !(opts.sample_interval > 0.0) {
        return Err(Error::Config(format!(
            "sample_interval must be positive, got {}",
            opts.sample_interval
        )));
    }
    let dt = match opts.dt_override {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => return Err(Error::Config(format!("dt must be positive, got {v}"))),
        None => default_step(params, grid),
    };
    let n_steps = (opts.t_end / dt).ceil() as usize;

    let mut engine = Propagator::new(params, grid, &initial, None)?;
    let transform = (!opts.snapshot_times.is_empty()).then(|| Transform::new(grid));
    let mut snapshot_times = opts.snapshot_times.clone();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
    let mut pending_snapshots = snapshot_times.into_iter().peekable();

    let mut samples = Vec::new();
    let mut snapshots = Vec::new();
    let take_snapshot = |engine: &Propagator, snapshots: &mut Vec<Snapshot>| {
        let state = engine.state();
        let tf = transform.as_ref().expect("transform exists when snapshots requested");
        let plus = tf.to_position(&state.phi_c);
        let minus = tf.to_position(&state.phi_d);
        snapshots.push(Snapshot {
            t: state.t,
            density_plus: plus.iter().map(|v| v.norm_sqr()).collect(),
            density_minus: minus.iter().map(|v| v.norm_sqr()).collect(),
        });
    };

    samples.push(sample_of(&engine.state()));
    while pending_snapshots.peek().is_some_and(|&ts| ts <= engine.t()) {
        pending_snapshots.next();
        take_snapshot(&engine, &mut snapshots);
    }
    let mut next_sample = opts.sample_interval;
    for step_idx in 0..n_steps {
        let remaining = opts.t_end - engine.t();
        engine.step(dt.min(remaining));
        let t = engine.t();
        let at_end = step_idx + 1 == n_steps;
        if t + 1e-12 >= next_sample || at_end {
            engine.check_finite()?;
            samples.push(sample_of(&engine.state()));
            while next_sample <= t + 1e-12 {
                next_sample += opts.sample_interval;
            }
        }
        while pending_snapshots.peek().is_some_and(|&ts| ts <= t) {
            pending_snapshots.next();
            take_snapshot(&engine, &mut snapshots);
        }
    }
    engine.check_finite()?;

    let final_state = engine.state();
    let residual = final_state.norm_internal();
    let warning = (residual >= RESIDUAL_THRESHOLD)
        .then_some(IncompleteRun { residual, threshold: RESIDUAL_THRESHOLD });
    Ok(Propagation { samples, snapshots, initial, final_state, warning })
}

/// Channel transmissions extracted from the initial and final states: T±
/// is the surviving norm fraction of the respective channel, `None` where
/// the channel carried no input.
///
/// Meaningful once the run is complete (negligible internal residual).
/// With a fully chiral split the two channels never exchange norm; at
/// intermediate chirality the emitter links them and the ratios measure
/// net channel survival instead.
pub fn transmissions(
    initial: &WavepacketState,
    final_state: &WavepacketState,
) -> (Option<f64>, Option<f64>) {
    let t_plus = {
        let n0 = initial.norm_c();
        (n0 > 0.0).then(|| final_state.norm_c() / n0)
    };
    let t_minus = {
        let n0 = initial.norm_d();
        (n0 > 0.0).then(|| final_state.norm_d() / n0)
    };
    (t_plus, t_minus)
}

/// One point of a pulse-extracted transmission spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpectrumPoint {
    /// Detuning Δ = ω − ω_c, rad/s (in the units of the run).
    pub delta: f64,
    pub t_plus: Option<f64>,
    pub t_minus: Option<f64>,
}

/// Spectral-density floor (relative to the peak) below which a mode is
/// masked in the pulse-extracted spectrum.
pub const SPECTRUM_FLOOR: f64 = 1e-8;

/// Extract the transmission spectra from short-pulse runs per direction:
/// T(Δ) = |φ_out(q)|² / |φ_in(q)|² with Δ mapped through the linearized
/// dispersion. Runs one forward-only and one backward-only propagation.
pub fn spectrum_via_pulse(
    params: &SystemParams,
    grid: &KGrid,
    pulse: &PulseSpec,
    t_end: f64,
) -> Result<Vec<PulseSpectrumPoint>> {
    let opts = PropagateOptions::new(t_end, t_end);
    let fwd = propagate(params, grid, &PulseSpec { amplitude_split: (1.0, 0.0), ..*pulse }, &opts)?;
    let bwd = propagate(params, grid, &PulseSpec { amplitude_split: (0.0, 1.0), ..*pulse }, &opts)?;
    for run in [&fwd, &bwd] {
        if let Some(w) = run.warning {
            return Err(Error::Config(format!("spectrum extraction needs a complete run: {w}")));
        }
    }

    let floor_c =
        SPECTRUM_FLOOR * fwd.initial.phi_c.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let floor_d =
        SPECTRUM_FLOOR * bwd.initial.phi_d.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let ratio = |inp: &[C64], out: &[C64], i: usize, floor: f64| -> Option<f64> {
        let w_in = inp[i].norm_sqr();
        (w_in > floor).then(|| out[i].norm_sqr() / w_in)
    };

    // Right-movers at q sit at Δ = +v_g q; left-movers at q sit at
    // Δ = −v_g q, so the backward value for a given Δ comes from the
    // mirrored mode.
    let points = (1..grid.n_modes)
        .map(|i| {
            let delta = grid.v_g * grid.q(i);
            let t_plus = ratio(&fwd.initial.phi_c, &fwd.final_state.phi_c, i, floor_c);
            let t_minus = grid
                .mirror(i)
                .and_then(|j| ratio(&bwd.initial.phi_d, &bwd.final_state.phi_d, j, floor_d));
            PulseSpectrumPoint { delta, t_plus, t_minus }
        })
        .collect();
    Ok(points)
}
