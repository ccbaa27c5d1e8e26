//! `emission`: excited-emitter decay into the resonator modes with
//! port-resolved waveguide collection.

use serde::Serialize;

use chiralsim_core::emission::{
    bare_cavity_collection, count_flux_peaks, default_step, directionality, evolve_bare_cavity,
    evolve_emission, waveguide_collection, DipoleInit, EmissionTrace,
};

use super::Context;
use crate::config::{self, ChiralityRequirement};
use crate::output::{self, Table};
use crate::{CliError, Completion};

#[derive(Serialize)]
struct Summary {
    n_waveguide: f64,
    n_port1: f64,
    n_port2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    directionality: Option<f64>,
    n_loss: f64,
    residual: f64,
    flux_peaks: usize,
    bare_cavity_closed_form: f64,
}

pub fn run(ctx: &Context) -> Result<Completion, CliError> {
    config::check_run_sections(ctx.cfg, Some("emission"))?;
    let resolved = config::resolve_system(ctx.cfg, ChiralityRequirement::Required)?;
    let run = config::emission_run(ctx.cfg)?;
    ctx.config_done()?;

    let p = resolved.params;
    if !(p.kappa_i > 0.0) {
        return Err(CliError::Config(
            "emission runs need kappa_i > 0 to set the time scale".into(),
        ));
    }
    let t_end = run.t_end_kappa_i / p.kappa_i;
    let dt = match run.dt_kappa_i {
        Some(x) => x / p.kappa_i,
        None => default_step(&p),
    };
    let trace = if run.preloaded_cavity {
        evolve_bare_cavity(&p, run.initial_excitation, t_end, dt)?
    } else {
        let dipole =
            DipoleInit { polarization: run.polarization, initial_excitation: run.initial_excitation };
        evolve_emission(&p, &dipole, t_end, dt)?
    };

    let outputs = write_outputs(ctx, &run, &p, &trace)?;
    output::write_sidecar(&ctx.out_dir, "emission", &ctx.provenance, &outputs)?;
    match trace.warning {
        Some(w) => Ok(Completion::Incomplete(w.to_string())),
        None => Ok(Completion::Clean),
    }
}

fn write_outputs(
    ctx: &Context,
    run: &config::EmissionRun,
    p: &chiralsim_core::SystemParams,
    trace: &EmissionTrace,
) -> Result<Vec<std::path::PathBuf>, CliError> {
    let stride = trace.len().div_ceil(run.max_rows).max(1);
    let mut table = Table::new(vec![
        "t_ns",
        "eq2",
        "ea2",
        "eb2",
        "flux_port1",
        "flux_port2",
        "n_port1",
        "n_port2",
        "n_loss",
    ]);
    let last = trace.len() - 1;
    for i in (0..trace.len()).step_by(stride).chain((last % stride != 0).then_some(last)) {
        table.push(vec![
            Some(trace.times[i] * 1e9),
            Some(trace.e_q2[i]),
            Some(trace.e_a2[i]),
            Some(trace.e_b2[i]),
            Some(trace.flux_port1[i]),
            Some(trace.flux_port2[i]),
            Some(trace.n_port1[i]),
            Some(trace.n_port2[i]),
            Some(trace.n_loss[i]),
        ]);
    }
    let table_path =
        output::write_table(&ctx.out_dir, "trace", &table, ctx.format, &ctx.provenance, &[])?;

    let total_flux: Vec<f64> = trace
        .flux_port1
        .iter()
        .zip(&trace.flux_port2)
        .map(|(a, b)| a + b)
        .collect();
    let dir = directionality(trace).ok();
    let summary = Summary {
        n_waveguide: waveguide_collection(trace),
        n_port1: trace.n_port1[last],
        n_port2: trace.n_port2[last],
        directionality: dir.map(|d| d.directionality),
        n_loss: trace.n_loss[last],
        residual: trace.residual(last),
        flux_peaks: count_flux_peaks(&total_flux, 1e-3),
        bare_cavity_closed_form: bare_cavity_collection(p.kappa_ex, p.kappa_i)?,
    };
    let summary_path =
        output::write_json(&ctx.out_dir, "summary.json", &summary, &ctx.provenance)?;
    Ok(vec![table_path, summary_path])
}
