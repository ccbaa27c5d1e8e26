//! `field-analyze`: chirality map and effective mode volume from an
//! ingested field-map file.

use std::io::BufReader;

use serde::Serialize;

use chiralsim_core::chirality::{chirality_map, io as field_io, mode_volume};

use super::Context;
use crate::config;
use crate::output::{self, Table};
use crate::{CliError, Completion};

#[derive(Serialize)]
struct Report {
    mode_volume_m3: f64,
    mode_volume_um3: f64,
    samples: usize,
    dims: [usize; 3],
    spacing_m: [f64; 3],
    defined_fraction: f64,
}

pub fn run(ctx: &Context) -> Result<Completion, CliError> {
    config::check_run_sections(ctx.cfg, Some("field_analyze"))?;
    let run = config::field_run(ctx.cfg)?;
    ctx.config_done()?;

    let file = std::fs::File::open(&run.input).map_err(|e| {
        CliError::Config(format!("cannot open field map {}: {e}", run.input.display()))
    })?;
    let map = field_io::read_field_map(BufReader::new(file))?;
    let values = chirality_map(&map)?;
    let v_m = mode_volume(&map)?;

    let map_path = match ctx.format {
        output::DataFormat::Csv => {
            let mut buf = Vec::new();
            field_io::write_chirality_map(
                &mut buf,
                &values,
                &[ctx.provenance.comment_line().trim_start_matches("# ").to_string()],
            )
            .map_err(|e| CliError::Config(format!("cannot render chirality map: {e}")))?;
            let path = ctx.out_dir.join("chirality_map.csv");
            output::write_atomic(&path, &buf)?;
            path
        }
        output::DataFormat::Json => {
            let mut table = Table::new(vec!["x", "y", "z", "c", "d", "defined"]);
            for v in &values {
                table.push(vec![
                    Some(v.position.0),
                    Some(v.position.1),
                    Some(v.position.2),
                    Some(v.c),
                    v.d,
                    Some(if v.d.is_some() { 1.0 } else { 0.0 }),
                ]);
            }
            output::write_table(
                &ctx.out_dir,
                "chirality_map",
                &table,
                ctx.format,
                &ctx.provenance,
                &[],
            )?
        }
    };

    let defined = values.iter().filter(|v| v.d.is_some()).count();
    let report = Report {
        mode_volume_m3: v_m,
        mode_volume_um3: v_m * 1e18,
        samples: values.len(),
        dims: [map.dims().0, map.dims().1, map.dims().2],
        spacing_m: [map.spacing().0, map.spacing().1, map.spacing().2],
        defined_fraction: defined as f64 / values.len() as f64,
    };
    let report_path =
        output::write_json(&ctx.out_dir, "field_report.json", &report, &ctx.provenance)?;
    output::write_sidecar(&ctx.out_dir, "field-analyze", &ctx.provenance, &[map_path, report_path])?;
    Ok(Completion::Clean)
}
