//! `sweep`: one system parameter against one isolation metric.

use rayon::prelude::*;

use chiralsim_core::scattering::{
    isolation_metrics, spectrum, transmission_closed_form, Detuning,
};
use chiralsim_core::{C64, SystemParams};

use super::{to_ghz, Context};
use crate::config::{self, ChiralityRequirement, SweepMetric, SweepParameter, SweepRun, Units};
use crate::output::{self, Table};
use crate::{CliError, Completion};

fn apply(
    base: &SystemParams,
    parameter: SweepParameter,
    value: f64,
    units: Units,
) -> Result<SystemParams, CliError> {
    let mut p = *base;
    match parameter {
        SweepParameter::G => p.g = units.rate(value),
        SweepParameter::ChiralityD => p.chirality_d = value,
        SweepParameter::HAbs => {
            let phase = if p.h == C64::new(0.0, 0.0) { 0.0 } else { p.h.arg() };
            p.h = C64::from_polar(units.rate(value), phase);
        }
        SweepParameter::GammaQ => p.gamma_q = units.rate(value),
        SweepParameter::KappaEx => p.kappa_ex = units.rate(value),
    }
    p.validate()?;
    Ok(p)
}

fn evaluate(p: &SystemParams, run: &SweepRun) -> Result<f64, CliError> {
    match run.metric {
        SweepMetric::Contrast | SweepMetric::Loss | SweepMetric::TPlus | SweepMetric::TMinus => {
            let (tp, tm) = transmission_closed_form(p, &Detuning::shared(0.0))?;
            let (tp, tm) = (tp.norm_sqr(), tm.norm_sqr());
            Ok(match run.metric {
                SweepMetric::TPlus => tp,
                SweepMetric::TMinus => tm,
                SweepMetric::Loss => -10.0 * tp.log10(),
                SweepMetric::Contrast => {
                    if tp + tm == 0.0 {
                        return Err(chiralsim_core::Error::UndefinedContrast.into());
                    }
                    (tp - tm) / (tp + tm)
                }
                SweepMetric::Bandwidth => unreachable!(),
            })
        }
        SweepMetric::Bandwidth => {
            let span = run.delta_span_kappa_i * p.kappa_i;
            let deltas: Vec<Detuning> = (0..run.delta_points)
                .map(|i| {
                    let frac = i as f64 / (run.delta_points - 1) as f64;
                    Detuning::shared(-span + 2.0 * span * frac)
                })
                .collect();
            let pts = spectrum(p, &deltas)?;
            let m = isolation_metrics(&pts, run.threshold)?;
            Ok(to_ghz(m.bandwidth))
        }
    }
}

pub fn run(ctx: &Context) -> Result<Completion, CliError> {
    config::check_run_sections(ctx.cfg, Some("sweep"))?;
    let resolved = config::resolve_system(ctx.cfg, ChiralityRequirement::Required)?;
    let run = config::sweep_run(ctx.cfg)?;
    ctx.config_done()?;

    let values: Vec<f64> = (0..run.steps)
        .map(|i| {
            let frac = i as f64 / (run.steps - 1) as f64;
            run.from + frac * (run.to - run.from)
        })
        .collect();
    let rows: Vec<(f64, f64)> = values
        .par_iter()
        .map(|&v| {
            let p = apply(&resolved.params, run.parameter, v, resolved.units)?;
            Ok((v, evaluate(&p, &run)?))
        })
        .collect::<Result<_, CliError>>()?;

    let mut table = Table::new(vec!["value", run.metric.column()]);
    for (v, m) in rows {
        table.push(vec![Some(v), Some(m)]);
    }
    let path =
        output::write_table(&ctx.out_dir, "sweep", &table, ctx.format, &ctx.provenance, &[])?;
    output::write_sidecar(&ctx.out_dir, "sweep", &ctx.provenance, &[path])?;
    Ok(Completion::Clean)
}
