//! Steady-state single-photon transport through the coupled
//! waveguide–resonator–emitter system.
//!
//! Two independent routes to the same transmission:
//!
//! - [`transmission_closed_form`]: literal transcription of the closed-form
//!   forward/backward amplitudes, with Δ̃_c = Δ_c + iκ_i and
//!   Δ̃_q = Δ_q + iγ_q.
//! - [`steady_state_solve`]: the 3×3 linear system for the internal
//!   amplitudes (e_a, e_b, e_q) assembled from the real-space scattering
//!   ansatz, plus the input–output relations. It also yields the reflection
//!   amplitude and all internal amplitudes, which the closed form does not.
//!
//! The two must agree to 1e-10 relative for every valid parameter set; the
//! randomized equivalence test is this module's central correctness
//! property.

use rayon::prelude::*;

use crate::chirality::{split_coupling, Direction};
use crate::params::SystemParams;
use crate::{C64, Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Probe detuning relative to the resonator and emitter lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detuning {
    /// Δ_c = ω − ω_c, rad/s.
    pub delta_c: f64,
    /// Δ_q = ω − ω_q, rad/s.
    pub delta_q: f64,
}

impl Detuning {
    /// Shared-frequency scan point (ω_c = ω_q): Δ_c = Δ_q.
    pub fn shared(delta: f64) -> Self {
        Self { delta_c: delta, delta_q: delta }
    }

    /// Detuning of an absolute probe frequency ω against `params`.
    pub fn from_probe(omega: f64, params: &SystemParams) -> Self {
        Self { delta_c: omega - params.omega_c, delta_q: omega - params.omega_q }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_c.is_finite() || !self.delta_q.is_finite() {
            return Err(Error::Validation(format!(
                "detuning must be finite, got ({}, {})",
                self.delta_c, self.delta_q
            )));
        }
        Ok(())
    }
}

/// Internal steady-state amplitudes for one input direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitudes {
    /// CCW resonator mode.
    pub e_a: C64,
    /// CW resonator mode.
    pub e_b: C64,
    /// Emitter excitation.
    pub e_q: C64,
}

/// Full steady-state solution for one input direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateSolution {
    pub t: C64,
    pub r: C64,
    pub amplitudes: ModeAmplitudes,
}

/// Both-direction scattering data at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub delta: Detuning,
    pub t_plus: C64,
    pub t_minus: C64,
    pub r_plus: C64,
    pub r_minus: C64,
    pub forward: ModeAmplitudes,
    pub backward: ModeAmplitudes,
    /// T± = |t±|².
    pub t_cap_plus: f64,
    pub t_cap_minus: f64,
}

impl ScatterPoint {
    /// Isolation contrast η = (T+ − T−)/(T+ + T−) at this point, if defined.
    pub fn contrast(&self) -> Option<f64> {
        let sum = self.t_cap_plus + self.t_cap_minus;
        (sum > 0.0).then(|| (self.t_cap_plus - self.t_cap_minus) / sum)
    }
}

/// Figures of merit of an isolation spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationMetrics {
    /// η at the grid point nearest Δ = 0.
    pub contrast: f64,
    /// ℒ = −10 log10(T+) in dB at the same point.
    pub insertion_loss_db: f64,
    /// Width (rad/s) of the maximal contiguous detuning window containing
    /// Δ = 0 with η ≥ `threshold`, linearly interpolated at the edges.
    pub bandwidth: f64,
    /// Contrast threshold that defined the window.
    pub threshold: f64,
}

struct ClosedFormInputs {
    dc: C64,
    dq: C64,
    x: C64,
    g_a: C64,
    g_b: C64,
    h: C64,
    kappa_ex: f64,
}

fn closed_form_inputs(params: &SystemParams, delta: &Detuning) -> Result<ClosedFormInputs> {
    params.validate()?;
    delta.validate()?;
    if !(params.kappa_ex > 0.0) {
        return Err(Error::Domain(format!(
            "transport needs kappa_ex > 0, got {}",
            params.kappa_ex
        )));
    }
    let split = split_coupling(params.g, params.chirality_d)?;
    let dc = C64::new(delta.delta_c, params.kappa_i);
    let dq = C64::new(delta.delta_q, params.gamma_q);
    Ok(ClosedFormInputs {
        dc,
        dq,
        x: dc + I * params.kappa_ex,
        g_a: split.g_a,
        g_b: split.g_b,
        h: params.h,
        kappa_ex: params.kappa_ex,
    })
}

/// Forward and backward transmission amplitudes (t+, t−) from the closed
/// form. The backward amplitude is the forward one with the roles of the
/// two mode couplings exchanged.
pub fn transmission_closed_form(params: &SystemParams, delta: &Detuning) -> Result<(C64, C64)> {
    let v = closed_form_inputs(params, delta)?;
    let t_plus = one_direction_closed_form(&v, v.g_a, v.g_b, delta)?;
    let t_minus = one_direction_closed_form(&v, v.g_b, v.g_a, delta)?;
    Ok((t_plus, t_minus))
}

fn one_direction_closed_form(
    v: &ClosedFormInputs,
    g_in: C64,
    g_out: C64,
    delta: &Detuning,
) -> Result<C64> {
    let g2 = g_in.norm_sqr() + g_out.norm_sqr();
    let cross = g_in.conj() * g_out * v.h + g_in * g_out.conj() * v.h.conj();
    let h2 = v.h.norm_sqr();
    let kex = v.kappa_ex;
    let num = v.dc * (v.dc * v.dq - g2) + v.dq * kex * kex - cross - v.dq * h2
        + I * (g_out.norm_sqr() - g_in.norm_sqr()) * kex;
    let den = v.x * (v.dq * v.x - g2) - cross - v.dq * h2;
    if den == C64::new(0.0, 0.0) {
        return Err(Error::Singularity {
            delta_rad_s: delta.delta_c,
            context: "closed-form transmission denominator vanished".into(),
        });
    }
    Ok(num / den)
}

/// Solve the internal-amplitude linear system for one input direction and
/// apply the input–output relations.
///
/// Unit-amplitude drive, v_g = 1, waveguide coupling V = sqrt(2 κ_ex).
pub fn steady_state_solve(
    params: &SystemParams,
    delta: &Detuning,
    direction: Direction,
) -> Result<SteadyStateSolution> {
    let v = closed_form_inputs(params, delta)?;
    let coupling = (2.0 * v.kappa_ex).sqrt();

    // Rows: CCW mode a, CW mode b, emitter q. The drive enters the row of
    // the mode the chosen direction addresses.
    //   X e_a − h* e_b − g_a* e_q = V·(forward)
    //  −h e_a + X e_b − g_b* e_q = V·(backward)
    //  −g_a e_a − g_b e_b + Δ̃_q e_q = 0
    let m = [
        [v.x, -v.h.conj(), -v.g_a.conj()],
        [-v.h, v.x, -v.g_b.conj()],
        [-v.g_a, -v.g_b, v.dq],
    ];
    let rhs = match direction {
        Direction::Forward => [C64::new(coupling, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        Direction::Backward => [C64::new(0.0, 0.0), C64::new(coupling, 0.0), C64::new(0.0, 0.0)],
    };
    let sol = solve3(&m, &rhs).ok_or_else(|| Error::Singularity {
        delta_rad_s: delta.delta_c,
        context: "steady-state system is singular".into(),
    })?;
    let amplitudes = ModeAmplitudes { e_a: sol[0], e_b: sol[1], e_q: sol[2] };

    // t = 1 − iV e_through, r = −iV e_counter.
    let (t, r) = match direction {
        Direction::Forward => {
            (C64::new(1.0, 0.0) - I * coupling * sol[0], -I * coupling * sol[1])
        }
        Direction::Backward => {
            (C64::new(1.0, 0.0) - I * coupling * sol[1], -I * coupling * sol[0])
        }
    };
    Ok(SteadyStateSolution { t, r, amplitudes })
}

/// Cramer's rule for a complex 3×3 system; `None` when the determinant is
/// exactly zero.
fn solve3(m: &[[C64; 3]; 3], rhs: &[C64; 3]) -> Option<[C64; 3]> {
    let det = det3(m);
    if det == C64::new(0.0, 0.0) {
        return None;
    }
    let mut out = [C64::new(0.0, 0.0); 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = *m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *slot = det3(&mc) / det;
    }
    Some(out)
}

fn det3(m: &[[C64; 3]; 3]) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Evaluate both directions over a detuning list. Order-preserving and
/// deterministic; points evaluate in parallel.
pub fn spectrum(params: &SystemParams, deltas: &[Detuning]) -> Result<Vec<ScatterPoint>> {
    if deltas.is_empty() {
        return Err(Error::Domain("spectrum needs a non-empty detuning list".into()));
    }
    deltas
        .par_iter()
        .enumerate()
        .map(|(idx, delta)| {
            let point = scatter_point(params, delta);
            point.map_err(|e| match e {
                Error::Singularity { delta_rad_s, context } => Error::Singularity {
                    delta_rad_s,
                    context: format!("{context} (spectrum index {idx})"),
                },
                other => other,
            })
        })
        .collect()
}

fn scatter_point(params: &SystemParams, delta: &Detuning) -> Result<ScatterPoint> {
    // Transmissions come from the closed form, whose structural zeros
    // (perfect absorption, perfect isolation) cancel exactly in floating
    // point; the solver contributes the reflections and internal
    // amplitudes the closed form does not expose. The two routes agree to
    // 1e-10 by the oracle-equivalence property.
    let (t_plus, t_minus) = transmission_closed_form(params, delta)?;
    let fwd = steady_state_solve(params, delta, Direction::Forward)?;
    let bwd = steady_state_solve(params, delta, Direction::Backward)?;
    let t_cap_plus = t_plus.norm_sqr();
    let t_cap_minus = t_minus.norm_sqr();
    debug_assert!(t_cap_plus <= 1.0 + 1e-9 && t_cap_minus <= 1.0 + 1e-9);
    Ok(ScatterPoint {
        delta: *delta,
        t_plus,
        t_minus,
        r_plus: fwd.r,
        r_minus: bwd.r,
        forward: fwd.amplitudes,
        backward: bwd.amplitudes,
        t_cap_plus,
        t_cap_minus,
    })
}

/// Contrast, insertion loss and nonreciprocal bandwidth of a spectrum.
///
/// η and ℒ are evaluated at the grid point nearest Δ_c = 0. The bandwidth
/// is the width of the maximal contiguous window containing that point with
/// η ≥ `threshold`, with the window edges linearly interpolated between
/// grid points; a window reaching the scan boundary is clipped there. The
/// spectrum must be sorted by ascending Δ_c.
pub fn isolation_metrics(points: &[ScatterPoint], threshold: f64) -> Result<IsolationMetrics> {
    if points.is_empty() {
        return Err(Error::Domain("isolation_metrics needs a non-empty spectrum".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!(
            "bandwidth threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if points.windows(2).any(|w| w[1].delta.delta_c <= w[0].delta.delta_c) {
        return Err(Error::Domain(
            "isolation_metrics needs the spectrum sorted by ascending delta_c".into(),
        ));
    }
    let center = points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.delta.delta_c.abs().partial_cmp(&b.delta.delta_c.abs()).expect("finite detunings")
        })
        .map(|(i, _)| i)
        .expect("non-empty");

    let c = &points[center];
    let contrast = c.contrast().ok_or(Error::UndefinedContrast)?;
    let insertion_loss_db = -10.0 * c.t_cap_plus.log10();

    let eta: Vec<Option<f64>> = points.iter().map(ScatterPoint::contrast).collect();
    let inside = |i: usize| eta[i].is_some_and(|v| v >= threshold);

    let bandwidth = if !inside(center) {
        0.0
    } else {
        let mut lo = center;
        while lo > 0 && inside(lo - 1) {
            lo -= 1;
        }
        let mut hi = center;
        while hi + 1 < points.len() && inside(hi + 1) {
            hi += 1;
        }
        let left = window_edge(points, &eta, threshold, lo, lo.checked_sub(1));
        let right =
            window_edge(points, &eta, threshold, hi, (hi + 1 < points.len()).then_some(hi + 1));
        right - left
    };

    Ok(IsolationMetrics { contrast, insertion_loss_db, bandwidth, threshold })
}

/// Interpolated detuning where η crosses the threshold between the last
/// inside point and its outside neighbor (scan edge if there is none).
fn window_edge(
    points: &[ScatterPoint],
    eta: &[Option<f64>],
    threshold: f64,
    inside_idx: usize,
    outside_idx: Option<usize>,
) -> f64 {
    let d_in = points[inside_idx].delta.delta_c;
    let Some(out) = outside_idx else {
        return d_in;
    };
    let e_in = eta[inside_idx].expect("inside point has defined contrast");
    match eta[out] {
        Some(e_out) if e_out < threshold => {
            let frac = (e_in - threshold) / (e_in - e_out);
            d_in + frac * (points[out].delta.delta_c - d_in)
        }
        // Undefined contrast just outside the window: no interpolation.
        _ => d_in,
    }
}

/// Steady state of the bare two-mode resonator with backscattering, driven
/// in mode a with amplitude `drive` at detuning Δ_in:
///
/// a = (iΔ_in + κ) √(2κ_ex) α_in / ((iΔ_in + κ)² + |h|²),
/// b = −i h* √(2κ_ex) α_in / ((iΔ_in + κ)² + |h|²).
pub fn bare_mode_amplitudes(
    kappa: f64,
    kappa_ex: f64,
    h: C64,
    delta_in: f64,
    drive: f64,
) -> Result<(C64, C64)> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("bare_mode_amplitudes needs kappa > 0, got {kappa}")));
    }
    if !(kappa_ex >= 0.0) || kappa_ex > kappa {
        return Err(Error::Domain(format!(
            "bare_mode_amplitudes needs 0 <= kappa_ex <= kappa, got {kappa_ex}"
        )));
    }
    let pole = C64::new(kappa, delta_in);
    let den = pole * pole + h.norm_sqr();
    if den == C64::new(0.0, 0.0) {
        return Err(Error::Singularity {
            delta_rad_s: delta_in,
            context: "bare-resonator denominator vanished".into(),
        });
    }
    let feed = (2.0 * kappa_ex).sqrt() * drive;
    Ok((pole * feed / den, -I * h.conj() * feed / den))
}

/// One point of the contrast-vs-chirality curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastPoint {
    pub d: f64,
    pub contrast: f64,
    pub insertion_loss_db: f64,
}

/// Resonance metrics as a function of the optical chirality, with the
/// backscattering turned off.
pub fn contrast_vs_chirality(
    template: &SystemParams,
    d_grid: &[f64],
) -> Result<Vec<ContrastPoint>> {
    if d_grid.is_empty() {
        return Err(Error::Domain("contrast_vs_chirality needs a non-empty D grid".into()));
    }
    if let Some(bad) = d_grid.iter().find(|d| !(-1.0..=0.0).contains(*d)) {
        return Err(Error::Domain(format!(
            "contrast_vs_chirality needs D in [-1, 0], got {bad}"
        )));
    }
    d_grid
        .par_iter()
        .map(|&d| {
            let mut p = *template;
            p.chirality_d = d;
            p.h = C64::new(0.0, 0.0);
            let (t_plus, t_minus) = transmission_closed_form(&p, &Detuning::shared(0.0))?;
            let (tp, tm) = (t_plus.norm_sqr(), t_minus.norm_sqr());
            let sum = tp + tm;
            if sum == 0.0 {
                return Err(Error::UndefinedContrast);
            }
            Ok(ContrastPoint {
                d,
                contrast: (tp - tm) / sum,
                insertion_loss_db: -10.0 * tp.log10(),
            })
        })
        .collect()
}
