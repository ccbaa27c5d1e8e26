//! Deterministic output writing.
//!
//! Data files carry a `#`-prefixed provenance header (tool version and
//! config hash) and contain nothing time-dependent; wall-clock metadata
//! goes to the `run_meta.json` sidecar. Files are written atomically
//! (temp file + rename) so partial runs never leave truncated data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const TOOL_NAME: &str = "chiralsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataFormat {
    Csv,
    Json,
}

#[derive(Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(config_hash: &str) -> Self {
        Self { tool: TOOL_NAME, version: TOOL_VERSION, config_sha256: config_hash.to_string() }
    }

    pub fn comment_line(&self) -> String {
        format!("# {} {} config_sha256={}", self.tool, self.version, self.config_sha256)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{file_name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_error(path, e))?;
    Ok(())
}

/// A numeric table; `None` cells render as `nan` (CSV) or `null` (JSON).
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self, provenance: &Provenance, extra_comments: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", provenance.comment_line());
        for line in extra_comments {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Some(v) => format!("{v}"),
                    None => "nan".to_string(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn to_json(&self, provenance: &Provenance) -> String {
        #[derive(Serialize)]
        struct JsonTable<'a> {
            #[serde(flatten)]
            provenance: &'a Provenance,
            columns: &'a [&'static str],
            rows: &'a [Vec<Option<f64>>],
        }
        let doc = JsonTable { provenance, columns: &self.columns, rows: &self.rows };
        serde_json::to_string_pretty(&doc).expect("table serialization cannot fail")
    }
}

/// Write a table under `dir` as `<stem>.csv` or `<stem>.json` depending on
/// the requested format; returns the path written.
pub fn write_table(
    dir: &Path,
    stem: &str,
    table: &Table,
    format: DataFormat,
    provenance: &Provenance,
    extra_comments: &[String],
) -> Result<PathBuf, CliError> {
    let (path, body) = match format {
        DataFormat::Csv => {
            (dir.join(format!("{stem}.csv")), table.to_csv(provenance, extra_comments))
        }
        DataFormat::Json => (dir.join(format!("{stem}.json")), table.to_json(provenance)),
    };
    write_atomic(&path, body.as_bytes())?;
    Ok(path)
}

/// Serialize a JSON document with the provenance fields flattened in.
pub fn json_with_provenance<T: Serialize>(value: &T, provenance: &Provenance) -> String {
    #[derive(Serialize)]
    struct Doc<'a, T: Serialize> {
        #[serde(flatten)]
        provenance: &'a Provenance,
        #[serde(flatten)]
        body: &'a T,
    }
    serde_json::to_string_pretty(&Doc { provenance, body: value })
        .expect("JSON serialization cannot fail")
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
    provenance: &Provenance,
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut body = json_with_provenance(value, provenance);
    body.push('\n');
    write_atomic(&path, body.as_bytes())?;
    Ok(path)
}

/// Run metadata sidecar; the only file allowed to carry a timestamp.
pub fn write_sidecar(
    dir: &Path,
    command: &str,
    provenance: &Provenance,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Sidecar<'a> {
        command: &'a str,
        created_unix_s: u64,
        outputs: Vec<String>,
    }
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = Sidecar {
        command,
        created_unix_s: created,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().and_then(|n| n.to_str()).unwrap_or("?").to_string())
            .collect(),
    };
    let body = json_with_provenance(&meta, provenance);
    write_atomic(&dir.join("run_meta.json"), body.as_bytes())
}
