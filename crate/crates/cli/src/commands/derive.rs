//! `derive`: resolve the system rates and report them in rad/s, the
//! 2π × GHz convention, and units of κ_i.

use serde::Serialize;

use super::{to_ghz, Context};
use crate::config::{self, ChiralityRequirement};
use crate::output;
use crate::{CliError, Completion};

#[derive(Serialize)]
struct RateSet {
    omega_c: f64,
    omega_q: f64,
    kappa_i: f64,
    kappa_ex: f64,
    gamma_q: f64,
    g: f64,
    h_abs: f64,
}

#[derive(Serialize)]
struct Report {
    rad_per_s: RateSet,
    ghz: RateSet,
    kappa_i_units: RateSet,
    chirality_d: f64,
    h_phase_deg: f64,
    kappa_total_ghz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_point_field_v_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evanescent_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_chirality_abs: Option<f64>,
}

pub fn run(ctx: &Context) -> Result<Completion, CliError> {
    config::check_run_sections(ctx.cfg, None)?;
    let resolved = config::resolve_system(ctx.cfg, ChiralityRequirement::OptionalDefaultZero)?;
    ctx.config_done()?;

    let p = resolved.params;
    let scaled = |f: &dyn Fn(f64) -> f64| RateSet {
        omega_c: f(p.omega_c),
        omega_q: f(p.omega_q),
        kappa_i: f(p.kappa_i),
        kappa_ex: f(p.kappa_ex),
        gamma_q: f(p.gamma_q),
        g: f(p.g),
        h_abs: f(p.h.norm()),
    };
    let model_chirality = resolved.evanescent_ratio.map(|rho| 2.0 * rho / (1.0 + rho * rho));
    let report = Report {
        rad_per_s: scaled(&|x| x),
        ghz: scaled(&to_ghz),
        kappa_i_units: scaled(&|x| x / p.kappa_i),
        chirality_d: p.chirality_d,
        h_phase_deg: p.h.arg().to_degrees(),
        kappa_total_ghz: to_ghz(p.kappa_total()),
        zero_point_field_v_per_m: resolved.zero_point_field,
        evanescent_ratio: resolved.evanescent_ratio,
        model_chirality_abs: model_chirality,
    };

    println!("{}", output::json_with_provenance(&report, &ctx.provenance));
    let path = output::write_json(&ctx.out_dir, "params.json", &report, &ctx.provenance)?;
    output::write_sidecar(&ctx.out_dir, "derive", &ctx.provenance, &[path])?;
    Ok(Completion::Clean)
}
