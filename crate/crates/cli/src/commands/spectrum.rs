//! `spectrum`: steady-state transmissions over a detuning scan, with the
//! isolation metrics evaluated at resonance.

use serde::Serialize;

use chiralsim_core::scattering::{isolation_metrics, spectrum, Detuning};

use super::{to_ghz, Context};
use crate::config::{self, ChiralityRequirement};
use crate::output::{self, Table};
use crate::{CliError, Completion};

/// Metric fields are null when the contrast is undefined at resonance
/// (both transmissions exactly zero) or the loss is not finite.
#[derive(Serialize)]
struct Metrics {
    contrast: Option<f64>,
    insertion_loss_db: Option<f64>,
    bandwidth_ghz: Option<f64>,
    threshold: f64,
}

pub fn run(ctx: &Context) -> Result<Completion, CliError> {
    config::check_run_sections(ctx.cfg, Some("spectrum"))?;
    let resolved = config::resolve_system(ctx.cfg, ChiralityRequirement::Required)?;
    let run = config::spectrum_run(ctx.cfg, resolved.units)?;
    ctx.config_done()?;

    let p = resolved.params;
    let deltas: Vec<Detuning> = (0..run.points)
        .map(|i| {
            let frac = i as f64 / (run.points - 1) as f64;
            Detuning::shared(run.delta_min + frac * (run.delta_max - run.delta_min))
        })
        .collect();
    let points = spectrum(&p, &deltas)?;
    let metrics = match isolation_metrics(&points, run.threshold) {
        Ok(m) => Some(m),
        Err(chiralsim_core::Error::UndefinedContrast) => None,
        Err(e) => return Err(e.into()),
    };

    let mut table = Table::new(vec![
        "delta_ghz",
        "t_plus_re",
        "t_plus_im",
        "t_minus_re",
        "t_minus_im",
        "T_plus",
        "T_minus",
        "eta",
    ]);
    for pt in &points {
        table.push(vec![
            Some(to_ghz(pt.delta.delta_c)),
            Some(pt.t_plus.re),
            Some(pt.t_plus.im),
            Some(pt.t_minus.re),
            Some(pt.t_minus.im),
            Some(pt.t_cap_plus),
            Some(pt.t_cap_minus),
            pt.contrast(),
        ]);
    }
    let table_path =
        output::write_table(&ctx.out_dir, "spectrum", &table, ctx.format, &ctx.provenance, &[])?;
    let metrics_doc = Metrics {
        contrast: metrics.map(|m| m.contrast),
        insertion_loss_db: metrics.map(|m| m.insertion_loss_db).filter(|v| v.is_finite()),
        bandwidth_ghz: metrics.map(|m| to_ghz(m.bandwidth)),
        threshold: run.threshold,
    };
    let metrics_path =
        output::write_json(&ctx.out_dir, "metrics.json", &metrics_doc, &ctx.provenance)?;
    output::write_sidecar(&ctx.out_dir, "spectrum", &ctx.provenance, &[table_path, metrics_path])?;
    Ok(Completion::Clean)
}
