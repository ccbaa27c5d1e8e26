//! Optical-chirality math.
//!
//! A transversely confined guided mode has an evanescent field
//! E = E_r ± i E_φ whose circular polarization handedness is locked to the
//! propagation direction. This module quantifies that: the intensity
//! difference C between the σ− and σ+ circular components, the normalized
//! optical chirality D ∈ [−1, 1], the (α, β) split of an emitter coupling
//! between counter-propagating modes, and the mode-volume integral over an
//! ingested field map.
//!
//! Conventions, fixed once here:
//! - The circular projections follow the component definition literally,
//!   without conjugating the basis vector: E·e_σ∓ = (E_x ∓ i E_y)/√2.
//!   The conjugation antisymmetry D(E*) = −D(E) pins this choice.
//! - C and D use the in-plane (x, y) components only; E_z enters only the
//!   |E|² of the mode-volume integrand.
//! - Zero in-plane field is an explicit "undefined chirality" state, never
//!   silently D = 0 (which would claim linear polarization).

use crate::{C64, Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Propagation direction of the guided light.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Input toward port 2; drives the counterclockwise mode.
    Forward,
    /// Input toward port 1; drives the clockwise mode.
    Backward,
}

/// One complex field sample on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub ex: C64,
    pub ey: C64,
    pub ez: C64,
    /// Position (x, y, z) in meters.
    pub position: (f64, f64, f64),
    /// Relative permittivity ε(r) at the sample.
    pub permittivity: f64,
}

impl FieldSample {
    fn in_plane_finite(&self) -> bool {
        self.ex.re.is_finite()
            && self.ex.im.is_finite()
            && self.ey.re.is_finite()
            && self.ey.im.is_finite()
    }

    /// |E|² including the out-of-plane component.
    pub fn intensity(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr() + self.ez.norm_sqr()
    }

    /// Complex conjugate of the field (time reversal of the mode).
    pub fn conjugated(&self) -> Self {
        Self { ex: self.ex.conj(), ey: self.ey.conj(), ez: self.ez.conj(), ..*self }
    }
}

/// σ∓ projections of the in-plane field: ((E_x − iE_y)/√2, (E_x + iE_y)/√2).
fn circular_components(sample: &FieldSample) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    let minus = (sample.ex - i * sample.ey) / SQRT_2;
    let plus = (sample.ex + i * sample.ey) / SQRT_2;
    (minus, plus)
}

/// Intensity difference C = |E·e_σ−|² − |E·e_σ+|² between the circular
/// components, in the squared unit of the field.
pub fn intensity_difference(sample: &FieldSample) -> Result<f64> {
    if !sample.in_plane_finite() {
        return Err(Error::Domain("intensity_difference: non-finite in-plane field".into()));
    }
    let (minus, plus) = circular_components(sample);
    Ok(minus.norm_sqr() - plus.norm_sqr())
}

/// Optical chirality D = C / (|E·e_σ−|² + |E·e_σ+|²) ∈ [−1, 1].
///
/// D = 1 (−1) means the in-plane field is entirely σ−- (σ+-) polarized;
/// D = 0 is linear polarization.
pub fn optical_chirality(sample: &FieldSample) -> Result<f64> {
    if !sample.in_plane_finite() {
        return Err(Error::Domain("optical_chirality: non-finite in-plane field".into()));
    }
    let (minus, plus) = circular_components(sample);
    let total = minus.norm_sqr() + plus.norm_sqr();
    if total == 0.0 {
        return Err(Error::UndefinedChirality);
    }
    let d = (minus.norm_sqr() - plus.norm_sqr()) / total;
    debug_assert!((-1.0..=1.0).contains(&d));
    Ok(d)
}

/// Ratio |E_φ|/|E_r| ≈ sqrt(1 − (n_clad/n_core)²) of the longitudinal to
/// transverse evanescent component for a guided mode.
pub fn evanescent_ratio(n_core: f64, n_clad: f64) -> Result<f64> {
    if !(n_core > n_clad && n_clad > 0.0) {
        return Err(Error::Domain(format!(
            "evanescent_ratio needs n_core > n_clad > 0, got n_core = {n_core}, n_clad = {n_clad}"
        )));
    }
    let r = n_clad / n_core;
    Ok((1.0 - r * r).sqrt())
}

/// Model evanescent field E = E_r ± i E_φ with |E_φ|/|E_r| = `ratio`,
/// normalized to unit in-plane norm.
///
/// The forward branch is the one with D < 0 (σ+-dominant outside wall);
/// reversing the direction conjugates the in-plane field and flips D.
pub fn model_evanescent_field(ratio: f64, direction: Direction) -> Result<FieldSample> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!(
            "model_evanescent_field needs ratio in [0, 1], got {ratio}"
        )));
    }
    let norm = (1.0 + ratio * ratio).sqrt();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Backward => 1.0,
    };
    Ok(FieldSample {
        ex: C64::new(1.0 / norm, 0.0),
        ey: C64::new(0.0, sign * ratio / norm),
        ez: C64::new(0.0, 0.0),
        position: (0.0, 0.0, 0.0),
        permittivity: 1.0,
    })
}

/// How an emitter coupling g splits between the co- and counter-propagating
/// modes at optical chirality D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralCoupling {
    /// Optical chirality D ∈ [−1, 1].
    pub d: f64,
    /// α = sqrt((1−D)/2): projection onto the co-propagating (CCW) mode.
    pub alpha: f64,
    /// β = sqrt((1+D)/2): projection onto the counter-propagating (CW) mode.
    pub beta: f64,
    /// g_a = α g, coupling to the CCW mode. Real non-negative by convention;
    /// the phase of the backscattering amplitude h absorbs all remaining
    /// convention freedom.
    pub g_a: C64,
    /// g_b = β g, coupling to the CW mode.
    pub g_b: C64,
}

/// Split a coupling rate g by chirality D into (α, β, g_a, g_b).
pub fn split_coupling(g: f64, d: f64) -> Result<ChiralCoupling> {
    if d.abs() > 1.0 || !d.is_finite() {
        return Err(Error::Domain(format!("split_coupling needs |D| <= 1, got {d}")));
    }
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::Domain(format!("split_coupling needs g >= 0, got {g}")));
    }
    let alpha = ((1.0 - d) / 2.0).sqrt();
    let beta = ((1.0 + d) / 2.0).sqrt();
    Ok(ChiralCoupling {
        d,
        alpha,
        beta,
        g_a: C64::new(alpha * g, 0.0),
        g_b: C64::new(beta * g, 0.0),
    })
}

/// A complete rectangular grid of field samples, row-major with x fastest,
/// then y, then z.
#[derive(Debug, Clone)]
pub struct FieldMap {
    samples: Vec<FieldSample>,
    dims: (usize, usize, usize),
    spacing: (f64, f64, f64),
}

/// Relative tolerance for grid regularity checks.
const GRID_TOL: f64 = 1e-9;

fn axis_coords(values: &mut Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    values.dedup();
    values.clone()
}

fn axis_spacing(name: &str, coords: &[f64]) -> Result<Option<f64>> {
    if coords.len() < 2 {
        return Ok(None);
    }
    let d0 = coords[1] - coords[0];
    let scale = coords.last().unwrap().abs().max(coords[0].abs()).max(d0.abs());
    for w in coords.windows(2) {
        if ((w[1] - w[0]) - d0).abs() > GRID_TOL * scale.max(1e-300) {
            return Err(Error::Format(format!(
                "{name} coordinates are not uniformly spaced ({} vs {})",
                w[1] - w[0],
                d0
            )));
        }
    }
    if !(d0 > 0.0) {
        return Err(Error::Format(format!("{name} spacing must be positive, got {d0}")));
    }
    Ok(Some(d0))
}

impl FieldMap {
    /// Assemble a map from an unordered sample list, inferring the grid.
    ///
    /// The samples must fill a rectangular grid completely. `dz_hint`
    /// supplies the out-of-plane cell size for single-plane maps (one z
    /// value), in meters.
    pub fn from_samples(mut samples: Vec<FieldSample>, dz_hint: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Format("field map has no samples".into()));
        }
        for s in &samples {
            let (x, y, z) = s.position;
            if !x.is_finite() || !y.is_finite() || !z.is_finite() {
                return Err(Error::Format("non-finite sample coordinates".into()));
            }
            if s.permittivity < 1.0 || !s.permittivity.is_finite() {
                return Err(Error::Format(format!(
                    "relative permittivity must be >= 1, got {}",
                    s.permittivity
                )));
            }
        }
        let mut xs: Vec<f64> = samples.iter().map(|s| s.position.0).collect();
        let mut ys: Vec<f64> = samples.iter().map(|s| s.position.1).collect();
        let mut zs: Vec<f64> = samples.iter().map(|s| s.position.2).collect();
        let (xs, ys, zs) = (axis_coords(&mut xs), axis_coords(&mut ys), axis_coords(&mut zs));
        let dims = (xs.len(), ys.len(), zs.len());
        if dims.0 * dims.1 * dims.2 != samples.len() {
            return Err(Error::Format(format!(
                "grid is not complete: {} x {} x {} cells but {} samples",
                dims.0,
                dims.1,
                dims.2,
                samples.len()
            )));
        }
        let dx = axis_spacing("x", &xs)?
            .ok_or_else(|| Error::Format("grid needs at least two x values".into()))?;
        let dy = axis_spacing("y", &ys)?
            .ok_or_else(|| Error::Format("grid needs at least two y values".into()))?;
        let dz = match axis_spacing("z", &zs)? {
            Some(d) => d,
            None => dz_hint.ok_or_else(|| {
                Error::Format("single-plane map needs a dz cell size (header `# dz=<m>`)".into())
            })?,
        };
        if !(dz > 0.0) {
            return Err(Error::Format(format!("dz must be positive, got {dz}")));
        }
        samples.sort_by(|a, b| {
            let ka = (a.position.2, a.position.1, a.position.0);
            let kb = (b.position.2, b.position.1, b.position.0);
            ka.partial_cmp(&kb).expect("finite coordinates")
        });
        // Completeness: after sorting, every (x, y, z) combination must
        // appear exactly once.
        for (i, s) in samples.iter().enumerate() {
            let ix = i % dims.0;
            let iy = (i / dims.0) % dims.1;
            let iz = i / (dims.0 * dims.1);
            let expect = (xs[ix], ys[iy], zs[iz]);
            let got = s.position;
            if got != expect {
                return Err(Error::Format(format!(
                    "grid is not rectangular/complete near sample {i}: expected {expect:?}, got {got:?}"
                )));
            }
        }
        Ok(Self { samples, dims, spacing: (dx, dy, dz) })
    }

    pub fn samples(&self) -> &[FieldSample] {
        &self.samples
    }

    /// (nx, ny, nz).
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    /// (dx, dy, dz) in meters.
    pub fn spacing(&self) -> (f64, f64, f64) {
        self.spacing
    }

    /// Cell volume dx·dy·dz, m³.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.0 * self.spacing.1 * self.spacing.2
    }

    /// Complex-conjugate every sample (the counter-propagating mode).
    pub fn conjugated(&self) -> Self {
        Self {
            samples: self.samples.iter().map(FieldSample::conjugated).collect(),
            ..self.clone()
        }
    }
}

/// Effective mode volume V_m = ∫ ε|E|² dV / max(ε|E|²) as a Riemann sum
/// over the grid, m³.
pub fn mode_volume(map: &FieldMap) -> Result<f64> {
    let mut sum = 0.0;
    let mut peak = 0.0_f64;
    for s in map.samples() {
        let w = s.permittivity * s.intensity();
        if !w.is_finite() {
            return Err(Error::Domain("mode_volume: non-finite field sample".into()));
        }
        sum += w;
        peak = peak.max(w);
    }
    if peak == 0.0 {
        return Err(Error::Domain("mode_volume: field is identically zero".into()));
    }
    Ok(sum * map.cell_volume() / peak)
}

/// Per-sample chirality values. `c` is always defined; `d` is `None` where
/// the in-plane field vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralityValue {
    pub position: (f64, f64, f64),
    pub c: f64,
    pub d: Option<f64>,
}

/// Evaluate C and D at every sample of the map.
pub fn chirality_map(map: &FieldMap) -> Result<Vec<ChiralityValue>> {
    map.samples()
        .iter()
        .map(|s| {
            let c = intensity_difference(s)?;
            let d = match optical_chirality(s) {
                Ok(v) => Some(v),
                Err(Error::UndefinedChirality) => None,
                Err(e) => return Err(e),
            };
            Ok(ChiralityValue { position: s.position, c, d })
        })
        .collect()
}

pub mod io {
    //! Field-map file I/O.
    //!
    //! Input CSV: header `x,y,z,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,eps`
    //! (the z column may be absent for single-plane maps, in which case a
    //! comment line `# dz=<meters>` must provide the cell height), units
    //! meters and relative permittivity, row-major over a rectangular grid.
    //!
    //! Output chirality-map CSV: `x,y,z,c,d,defined` with `defined` ∈ {0,1};
    //! `d` is written as 0 on undefined rows and must be gated on `defined`.

    use super::{ChiralityValue, FieldMap, FieldSample};
    use crate::{C64, Error, Result};
    use std::io::{BufRead, Write};

    const FULL_HEADER: [&str; 10] =
        ["x", "y", "z", "re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez", "eps"];
    const PLANE_HEADER: [&str; 9] =
        ["x", "y", "re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez", "eps"];

    fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
        field.trim().parse::<f64>().map_err(|_| {
            Error::Format(format!("line {line_no}: cannot parse `{field}` as a number"))
        })
    }

    /// Read a field map from CSV text.
    pub fn read_field_map<R: BufRead>(reader: R) -> Result<FieldMap> {
        let mut dz_hint: Option<f64> = None;
        let mut header: Option<Vec<String>> = None;
        let mut has_z = true;
        let mut samples = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::Format(format!("read failure: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("dz=") {
                    dz_hint = Some(parse_f64(v, line_no)?);
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            match &header {
                None => {
                    if fields == FULL_HEADER {
                        has_z = true;
                    } else if fields == PLANE_HEADER {
                        has_z = false;
                    } else {
                        return Err(Error::Format(format!(
                            "line {line_no}: unrecognized field-map header `{trimmed}`"
                        )));
                    }
                    header = Some(fields.iter().map(|s| s.to_string()).collect());
                }
                Some(h) => {
                    if fields.len() != h.len() {
                        return Err(Error::Format(format!(
                            "line {line_no}: expected {} fields, got {}",
                            h.len(),
                            fields.len()
                        )));
                    }
                    let v: Vec<f64> = fields
                        .iter()
                        .map(|f| parse_f64(f, line_no))
                        .collect::<Result<_>>()?;
                    let (pos, rest) = if has_z {
                        ((v[0], v[1], v[2]), &v[3..])
                    } else {
                        ((v[0], v[1], 0.0), &v[2..])
                    };
                    samples.push(FieldSample {
                        ex: C64::new(rest[0], rest[1]),
                        ey: C64::new(rest[2], rest[3]),
                        ez: C64::new(rest[4], rest[5]),
                        position: pos,
                        permittivity: rest[6],
                    });
                }
            }
        }
        if header.is_none() {
            return Err(Error::Format("field-map file has no header".into()));
        }
        FieldMap::from_samples(samples, dz_hint)
    }

    /// Write a chirality map as CSV. `preamble` lines are emitted first,
    /// each prefixed with `# `.
    pub fn write_chirality_map<W: Write>(
        mut w: W,
        values: &[ChiralityValue],
        preamble: &[String],
    ) -> std::io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "x,y,z,c,d,defined")?;
        for v in values {
            let (x, y, z) = v.position;
            match v.d {
                Some(d) => writeln!(w, "{x},{y},{z},{},{d},1", v.c)?,
                None => writeln!(w, "{x},{y},{z},{},0,0", v.c)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn plain_sample(ex: C64, ey: C64) -> FieldSample {
        FieldSample { ex, ey, ez: C64::new(0.0, 0.0), position: (0.0, 0.0, 0.0), permittivity: 1.0 }
    }

    #[test]
    fn pure_circular_basis_fields() {
        // E ∝ (e_x + i e_y): E·e_σ− = (1 − i·i)/√2 = √2, E·e_σ+ = 0 → D = 1.
        let s = plain_sample(C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        let total = s.ex.norm_sqr() + s.ey.norm_sqr();
        assert_relative_eq!(intensity_difference(&s).unwrap(), total, max_relative = 1e-15);
        assert_eq!(optical_chirality(&s).unwrap(), 1.0);
        // Opposite handedness.
        let s = plain_sample(C64::new(1.0, 0.0), C64::new(0.0, -1.0));
        assert_eq!(optical_chirality(&s).unwrap(), -1.0);
    }

    #[test]
    fn linear_field_is_achiral() {
        let s = plain_sample(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        assert_eq!(intensity_difference(&s).unwrap(), 0.0);
        assert_eq!(optical_chirality(&s).unwrap(), 0.0);
    }

    #[test]
    fn zero_in_plane_field_is_undefined_not_zero() {
        let mut s = plain_sample(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        s.ez = C64::new(1.0, 0.0);
        assert!(matches!(optical_chirality(&s), Err(Error::UndefinedChirality)));
    }

    #[test]
    fn nan_field_is_domain_error() {
        let s = plain_sample(C64::new(f64::NAN, 0.0), C64::new(0.0, 0.0));
        assert!(matches!(intensity_difference(&s), Err(Error::Domain(_))));
        assert!(matches!(optical_chirality(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn evanescent_ratio_reference_indices() {
        // Silicon core against air cladding: ratio ≈ 0.96.
        let r = evanescent_ratio(3.48, 1.0).unwrap();
        assert_abs_diff_eq!(r, 0.95782, epsilon = 1e-5);
        // Degenerate limit: ratio → 0 as the indices merge.
        let r = evanescent_ratio(1.5, 1.5 - 1e-9).unwrap();
        assert!(r < 1e-4);
        assert!(evanescent_ratio(1.0, 1.5).is_err());
    }

    #[test]
    fn model_field_limits() {
        // No longitudinal component: linear polarization.
        let s = model_evanescent_field(0.0, Direction::Forward).unwrap();
        assert_eq!(optical_chirality(&s).unwrap(), 0.0);
        // Equal components: perfect circular polarization.
        let s = model_evanescent_field(1.0, Direction::Forward).unwrap();
        assert_relative_eq!(optical_chirality(&s).unwrap().abs(), 1.0, max_relative = 1e-14);
        assert!(model_evanescent_field(1.5, Direction::Forward).is_err());
        assert!(model_evanescent_field(-0.1, Direction::Backward).is_err());
    }

    #[test]
    fn model_field_closed_form_and_direction_flip() {
        // |D| = 2ρ/(1+ρ²), forward branch negative.
        for rho in [0.1, 0.5, 0.9578, 0.96, 0.999] {
            let fwd = model_evanescent_field(rho, Direction::Forward).unwrap();
            let bwd = model_evanescent_field(rho, Direction::Backward).unwrap();
            let df = optical_chirality(&fwd).unwrap();
            let db = optical_chirality(&bwd).unwrap();
            let expect = 2.0 * rho / (1.0 + rho * rho);
            assert!(df <= 0.0);
            assert_abs_diff_eq!(df.abs(), expect, epsilon = 1e-12);
            assert_eq!(df, -db); // exact negatives by conjugation
        }
        // The published operating point: ρ ≈ 0.96 → |D| ≈ 0.999.
        let s = model_evanescent_field(0.96, Direction::Forward).unwrap();
        assert_abs_diff_eq!(optical_chirality(&s).unwrap().abs(), 0.999, epsilon = 5e-4);
    }

    #[test]
    fn split_coupling_reference_points() {
        let c = split_coupling(1.0, -0.99).unwrap();
        assert_relative_eq!(c.alpha, 0.995_f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(c.beta, 0.005_f64.sqrt(), max_relative = 1e-15);

        let c = split_coupling(2.0, 0.0).unwrap();
        assert_relative_eq!(c.alpha, 1.0 / SQRT_2, max_relative = 1e-15);
        assert_relative_eq!(c.beta, 1.0 / SQRT_2, max_relative = 1e-15);

        let c = split_coupling(3.0, -1.0).unwrap();
        assert_eq!((c.alpha, c.beta), (1.0, 0.0));
        assert_eq!(c.g_a.re, 3.0);
        assert_eq!(c.g_b.re, 0.0);

        assert!(split_coupling(1.0, -1.01).is_err());
        assert!(split_coupling(-1.0, 0.0).is_err());
    }

    #[test]
    fn split_coupling_normalization_over_grid() {
        // α² + β² = 1 and |g_a|² + |g_b|² = g² across 10⁴ chirality values.
        let g = 2.0 * std::f64::consts::PI * 6.86e9;
        for i in 0..10_000 {
            let d = -1.0 + 2.0 * (i as f64) / 9_999.0;
            let c = split_coupling(g, d).unwrap();
            assert_abs_diff_eq!(c.alpha * c.alpha + c.beta * c.beta, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                (c.g_a.norm_sqr() + c.g_b.norm_sqr()) / (g * g),
                1.0,
                epsilon = 1e-12
            );
        }
    }

    fn uniform_map(nx: usize, ny: usize, nz: usize, value: C64) -> FieldMap {
        let (dx, dy, dz) = (1e-7, 2e-7, 3e-7);
        let mut samples = Vec::new();
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    samples.push(FieldSample {
                        ex: value,
                        ey: C64::new(0.0, 0.0),
                        ez: C64::new(0.0, 0.0),
                        position: (ix as f64 * dx, iy as f64 * dy, iz as f64 * dz),
                        permittivity: 1.0,
                    });
                }
            }
        }
        FieldMap::from_samples(samples, if nz == 1 { Some(dz) } else { None }).unwrap()
    }

    #[test]
    fn mode_volume_uniform_field_is_domain_volume() {
        let map = uniform_map(5, 4, 3, C64::new(1.0, 0.5));
        let v = mode_volume(&map).unwrap();
        let cells = 5.0 * 4.0 * 3.0;
        assert_relative_eq!(v, cells * map.cell_volume(), max_relative = 1e-12);
    }

    #[test]
    fn mode_volume_single_hot_cell() {
        let mut map = uniform_map(4, 4, 2, C64::new(0.0, 0.0));
        map.samples[5].ex = C64::new(2.0, 1.0);
        let v = mode_volume(&map).unwrap();
        assert_relative_eq!(v, map.cell_volume(), max_relative = 1e-12);
    }

    #[test]
    fn mode_volume_rejects_dead_field() {
        let map = uniform_map(3, 3, 1, C64::new(0.0, 0.0));
        assert!(matches!(mode_volume(&map), Err(Error::Domain(_))));
    }

    #[test]
    fn mode_volume_gaussian_against_analytic() {
        // E ∝ exp(−r²/2w²) in vacuum: ε|E|² = exp(−r²/w²) integrates to
        // π^{3/2} w³ with peak 1, so V_m = π^{3/2} w³.
        let w = 1.0e-6;
        let n = 41;
        let half = 4.0 * w;
        let step = 2.0 * half / (n as f64 - 1.0);
        let mut samples = Vec::with_capacity(n * n * n);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let x = -half + ix as f64 * step;
                    let y = -half + iy as f64 * step;
                    let z = -half + iz as f64 * step;
                    let r2 = x * x + y * y + z * z;
                    samples.push(FieldSample {
                        ex: C64::new((-r2 / (2.0 * w * w)).exp(), 0.0),
                        ey: C64::new(0.0, 0.0),
                        ez: C64::new(0.0, 0.0),
                        position: (x, y, z),
                        permittivity: 1.0,
                    });
                }
            }
        }
        let map = FieldMap::from_samples(samples, None).unwrap();
        let analytic = std::f64::consts::PI.powf(1.5) * w.powi(3);
        assert_relative_eq!(mode_volume(&map).unwrap(), analytic, max_relative = 1e-2);
    }

    #[test]
    fn field_map_rejects_incomplete_grid() {
        let map = uniform_map(3, 3, 2, C64::new(1.0, 0.0));
        let mut samples = map.samples.clone();
        samples.pop();
        assert!(matches!(FieldMap::from_samples(samples, None), Err(Error::Format(_))));
        // Duplicate point instead of the missing one: still malformed.
        let mut samples = map.samples.clone();
        let dup = samples[0];
        samples.pop();
        samples.push(dup);
        assert!(matches!(FieldMap::from_samples(samples, None), Err(Error::Format(_))));
    }

    #[test]
    fn chirality_map_pure_sigma_plus_and_conjugation() {
        // E = e_x − i e_y has zero σ− projection → D ≡ −1 everywhere;
        // conjugation (time reversal) negates the map.
        let mut map = uniform_map(3, 2, 1, C64::new(0.0, 0.0));
        for s in &mut map.samples {
            s.ex = C64::new(1.0, 0.0);
            s.ey = C64::new(0.0, -1.0);
        }
        let vals = chirality_map(&map).unwrap();
        assert!(vals.iter().all(|v| v.d == Some(-1.0)));
        let conj_vals = chirality_map(&map.conjugated()).unwrap();
        for (a, b) in vals.iter().zip(&conj_vals) {
            assert_eq!(a.d.unwrap(), -b.d.unwrap());
        }
    }

    #[test]
    fn chirality_map_flags_undefined_samples() {
        let mut map = uniform_map(2, 2, 1, C64::new(1.0, 0.0));
        map.samples[0].ex = C64::new(0.0, 0.0);
        map.samples[0].ez = C64::new(1.0, 0.0);
        let vals = chirality_map(&map).unwrap();
        assert_eq!(vals[0].d, None);
        assert!(vals[1..].iter().all(|v| v.d.is_some()));
    }

    #[test]
    fn model_ring_profile_has_high_chirality() {
        // A ring of model evanescent samples at the design ratio: |D| = 0.999
        // everywhere on the ring.
        let rho = evanescent_ratio(3.48, 1.0).unwrap();
        for _ in 0..16 {
            let s = model_evanescent_field(rho, Direction::Forward).unwrap();
            assert_abs_diff_eq!(optical_chirality(&s).unwrap().abs(), 0.999, epsilon = 1e-3);
        }
    }

    #[test]
    fn field_map_csv_round_trip() {
        let text = "\
# synthetic map
# dz=2e-7
x,y,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,eps
0,0,1,0,0,-0.9,0,0,1
1e-7,0,1,0,0,-0.9,0,0,1
0,1e-7,1,0,0,0.9,0,0,12.1
1e-7,1e-7,0,0,0,0,1,0,1
";
        let map = io::read_field_map(std::io::Cursor::new(text)).unwrap();
        assert_eq!(map.dims(), (2, 2, 1));
        assert_eq!(map.spacing(), (1e-7, 1e-7, 2e-7));
        let vals = chirality_map(&map).unwrap();
        assert!(vals[0].d.unwrap() < -0.99);
        assert!(vals[2].d.unwrap() > 0.99);
        assert_eq!(vals[3].d, None);
        let mut out = Vec::new();
        io::write_chirality_map(&mut out, &vals, &[String::from("tool test")]).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("# tool test\nx,y,z,c,d,defined\n"));
        assert_eq!(s.lines().count(), 2 + vals.len());
        assert!(s.lines().last().unwrap().ends_with(",0,0"));
    }

    #[test]
    fn field_map_csv_errors() {
        let no_header = "0,0,1,0,0,0,0,0,1\n";
        assert!(io::read_field_map(std::io::Cursor::new(no_header)).is_err());
        let bad_value = "x,y,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,eps\n0,0,oops,0,0,0,0,0,1\n";
        assert!(io::read_field_map(std::io::Cursor::new(bad_value)).is_err());
        let no_dz = "x,y,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,eps\n0,0,1,0,0,0,0,0,1\n1e-7,0,1,0,0,0,0,0,1\n0,1e-7,1,0,0,0,0,0,1\n1e-7,1e-7,1,0,0,0,0,0,1\n";
        assert!(io::read_field_map(std::io::Cursor::new(no_dz)).is_err());
    }

    proptest! {
        /// D(E*) = −D(E) for every sample with nonzero in-plane field, and
        /// D stays inside [−1, 1] exactly.
        #[test]
        fn conjugation_antisymmetry(
            exr in -10.0_f64..10.0, exi in -10.0_f64..10.0,
            eyr in -10.0_f64..10.0, eyi in -10.0_f64..10.0,
        ) {
            let s = plain_sample(C64::new(exr, exi), C64::new(eyr, eyi));
            prop_assume!(s.ex.norm_sqr() + s.ey.norm_sqr() > 0.0);
            let d = optical_chirality(&s).unwrap();
            let d_conj = optical_chirality(&s.conjugated()).unwrap();
            prop_assert!((-1.0..=1.0).contains(&d));
            prop_assert_eq!(d_conj, -d);
        }

        /// C is invariant under a global phase of the field.
        #[test]
        fn intensity_difference_phase_invariant(
            exr in -5.0_f64..5.0, exi in -5.0_f64..5.0,
            eyr in -5.0_f64..5.0, eyi in -5.0_f64..5.0,
            phase in 0.0_f64..std::f64::consts::TAU,
        ) {
            let s = plain_sample(C64::new(exr, exi), C64::new(eyr, eyi));
            let rot = C64::from_polar(1.0, phase);
            let r = plain_sample(rot * s.ex, rot * s.ey);
            let c0 = intensity_difference(&s).unwrap();
            let c1 = intensity_difference(&r).unwrap();
            let scale = s.ex.norm_sqr() + s.ey.norm_sqr();
            prop_assert!((c0 - c1).abs() <= 1e-12 * scale.max(1.0));
        }
    }
}
