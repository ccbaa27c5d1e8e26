//! Flat key-value run configuration.
//!
//! The format is diff-friendly plain text: one `key = value` pair per line,
//! dotted section keys, `#` comments. Rates are plain numbers interpreted
//! per the `units` mode:
//!
//! - `units = ghz`: a value X is the X in the 2π × X GHz convention.
//! - `units = kappa_i`: values are multiples of κ_i, and `system.kappa_i_ghz`
//!   must anchor the absolute scale.
//!
//! The system block either lists the rates directly or gives device-level
//! specs (dipole moment, quality factor, mode volume, wavelength) from
//! which the rates are derived; mixing the two is rejected. Exactly one
//! `run.<command>` section may be present and it must match the subcommand.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chiralsim_core::emission::Polarization;
use chiralsim_core::params::{self, EmitterSpec, ResonatorSpec};
use chiralsim_core::{C64, SystemParams};

use crate::CliError;

const DEFAULT_WAVELENGTH_UM: f64 = 1.556;

/// Raw parsed file: ordered key-value pairs plus consumption tracking so
/// unknown keys are reported.
pub struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<BTreeSet<String>>,
    pub sha256_prefix: String,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RawConfig {
    pub fn parse(text: &str, hash: String) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_error(format!("line {line_no}: expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(config_error(format!("line {line_no}: empty key or value")));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(config_error(format!("line {line_no}: duplicate key `{key}`")));
            }
        }
        Ok(Self { values, consumed: Default::default(), sha256_prefix: hash })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| {
            config_error(format!("cannot read config {}: {e}", path.display()))
        })?;
        use sha2::Digest;
        let digest = sha2::Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let text = String::from_utf8(bytes)
            .map_err(|_| config_error("config file is not valid UTF-8"))?;
        Self::parse(&text, hex[..12].to_string())
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key)?;
        self.consumed.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| config_error(format!("{key}: cannot parse `{v}` as a number")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?.ok_or_else(|| config_error(format!("missing required field `{key}`")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| config_error(format!("{key}: cannot parse `{v}` as an integer")))
            })
            .transpose()
            .map(|o| o.unwrap_or(default))
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.get(key).map(|s| s.to_string())
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<f64>().map_err(|_| {
                            config_error(format!("{key}: cannot parse `{item}` as a number"))
                        })
                    })
                    .collect::<Result<Vec<f64>, CliError>>()
            })
            .transpose()
    }

    /// Every key must have been consumed by the typed extraction.
    pub fn finish(&self) -> Result<(), CliError> {
        let consumed = self.consumed.borrow();
        let unknown: Vec<&String> =
            self.values.keys().filter(|k| !consumed.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(config_error(format!(
                "unknown or unused config keys: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}

/// Unit mode of the config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Units {
    /// Plain numbers are the X of 2π × X GHz.
    Ghz,
    /// Plain numbers are multiples of κ_i; `kappa_i_ghz` anchors the scale.
    KappaI { kappa_i: f64 },
}

impl Units {
    /// Convert a config-file rate to rad/s.
    pub fn rate(&self, x: f64) -> f64 {
        match self {
            Units::Ghz => params::ghz(x),
            Units::KappaI { kappa_i } => x * kappa_i,
        }
    }
}

/// System parameters plus the derivation byproducts worth reporting.
pub struct ResolvedSystem {
    pub params: SystemParams,
    pub units: Units,
    /// Zero-point field, V/m (derivation path only).
    pub zero_point_field: Option<f64>,
    /// Evanescent |E_φ|/|E_r| ratio (when indices are given).
    pub evanescent_ratio: Option<f64>,
}

/// `chirality_d` handling differs per command: transport needs it, a bare
/// parameter derivation may omit it.
pub enum ChiralityRequirement {
    Required,
    OptionalDefaultZero,
}

pub fn resolve_system(
    cfg: &RawConfig,
    chirality: ChiralityRequirement,
) -> Result<ResolvedSystem, CliError> {
    let units = match cfg.string("units").as_deref() {
        None | Some("ghz") => Units::Ghz,
        Some("kappa_i") => {
            let anchor = cfg.f64("system.kappa_i_ghz")?.ok_or_else(|| {
                config_error(
                    "units = kappa_i needs `system.kappa_i_ghz` to anchor the absolute scale",
                )
            })?;
            Units::KappaI { kappa_i: params::ghz(anchor) }
        }
        Some(other) => {
            return Err(config_error(format!("units must be `ghz` or `kappa_i`, got `{other}`")))
        }
    };
    let chirality_d = match chirality {
        ChiralityRequirement::Required => cfg.require_f64("system.chirality_d")?,
        ChiralityRequirement::OptionalDefaultZero => cfg.f64_or("system.chirality_d", 0.0)?,
    };
    let h = C64::from_polar(
        units.rate(cfg.f64_or("system.h_abs", 0.0)?),
        cfg.f64_or("system.h_phase_deg", 0.0)? * PI / 180.0,
    );

    let spec_keys =
        ["system.dipole_debye", "system.q_intrinsic", "system.mode_volume_um3", "system.n_core"];
    let direct_keys = ["system.kappa_i", "system.g", "system.gamma_q"];
    let spec_path = spec_keys.iter().any(|k| cfg.has(k));
    let direct_path = direct_keys.iter().any(|k| cfg.has(k));
    if spec_path && direct_path {
        return Err(config_error(
            "config mixes device-level system keys (dipole_debye/q_intrinsic/mode_volume_um3) \
             with direct rates (kappa_i/g/gamma_q); use one style",
        ));
    }

    if spec_path {
        let resonator = ResonatorSpec {
            wavelength_c: cfg.f64_or("system.wavelength_c_um", DEFAULT_WAVELENGTH_UM)? * 1e-6,
            q_intrinsic: cfg.require_f64("system.q_intrinsic")?,
            kappa_ex_ratio: cfg.f64_or("system.kappa_ex_ratio", 1.0)?,
            mode_volume: cfg.require_f64("system.mode_volume_um3")? * 1e-18,
            n_core: cfg.f64_or("system.n_core", 3.48)?,
            n_clad: cfg.f64_or("system.n_clad", 1.0)?,
        };
        let emitter = EmitterSpec {
            dipole_debye: cfg.require_f64("system.dipole_debye")?,
            wavelength_q: cfg
                .f64_or("system.wavelength_q_um", resonator.wavelength_c * 1e6)?
                * 1e-6,
            gamma_override: cfg.f64("system.gamma_override")?.map(|x| units.rate(x)),
        };
        let p = params::resolve(&resonator, &emitter, h, chirality_d)?;
        let e0 = params::zero_point_field(p.omega_c, resonator.mode_volume)?;
        let ratio = chiralsim_core::chirality::evanescent_ratio(resonator.n_core, resonator.n_clad)
            .ok();
        Ok(ResolvedSystem {
            params: p,
            units,
            zero_point_field: Some(e0),
            evanescent_ratio: ratio,
        })
    } else {
        let kappa_i = match units {
            Units::Ghz => units.rate(cfg.require_f64("system.kappa_i")?),
            // In kappa_i units the intrinsic rate is 1 unless overridden.
            Units::KappaI { .. } => units.rate(cfg.f64_or("system.kappa_i", 1.0)?),
        };
        let kappa_ex = match (cfg.f64("system.kappa_ex")?, cfg.f64("system.kappa_ex_ratio")?) {
            (Some(_), Some(_)) => {
                return Err(config_error(
                    "give either system.kappa_ex or system.kappa_ex_ratio, not both",
                ))
            }
            (Some(x), None) => units.rate(x),
            (None, Some(r)) => r * kappa_i,
            (None, None) => {
                return Err(config_error(
                    "missing required field `system.kappa_ex` (or `system.kappa_ex_ratio`)",
                ))
            }
        };
        let wavelength_c = cfg.f64_or("system.wavelength_c_um", DEFAULT_WAVELENGTH_UM)? * 1e-6;
        let wavelength_q = cfg.f64_or("system.wavelength_q_um", wavelength_c * 1e6)? * 1e-6;
        let omega_c = 2.0 * PI * chiralsim_core::constants::C_LIGHT / wavelength_c;
        let omega_q = 2.0 * PI * chiralsim_core::constants::C_LIGHT / wavelength_q;
        let p = SystemParams::new(
            omega_c,
            omega_q,
            kappa_i,
            kappa_ex,
            units.rate(cfg.require_f64("system.gamma_q")?),
            units.rate(cfg.require_f64("system.g")?),
            h,
            chirality_d,
        )?;
        Ok(ResolvedSystem { params: p, units, zero_point_field: None, evanescent_ratio: None })
    }
}

/// Which run section a subcommand expects.
pub fn check_run_sections(cfg: &RawConfig, expected: Option<&str>) -> Result<(), CliError> {
    let sections: BTreeSet<&str> = cfg
        .values
        .keys()
        .filter_map(|k| k.strip_prefix("run."))
        .filter_map(|rest| rest.split('.').next())
        .collect();
    match expected {
        None => {
            if sections.is_empty() {
                Ok(())
            } else {
                Err(config_error(format!(
                    "this command takes no run section, but found: {}",
                    sections.into_iter().collect::<Vec<_>>().join(", ")
                )))
            }
        }
        Some(name) => {
            let extra: Vec<&str> = sections.iter().copied().filter(|s| *s != name).collect();
            if !extra.is_empty() {
                return Err(config_error(format!(
                    "config carries run sections for other commands: {}",
                    extra.join(", ")
                )));
            }
            Ok(())
        }
    }
}

/// Output controls shared by every command.
pub struct OutputConfig {
    pub dir: PathBuf,
}

pub fn output_config(cfg: &RawConfig, cli_out: Option<PathBuf>) -> OutputConfig {
    let dir = cli_out
        .or_else(|| cfg.string("output.dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    OutputConfig { dir }
}

/// Parameters of a `spectrum` run.
pub struct SpectrumRun {
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
    pub threshold: f64,
}

pub fn spectrum_run(cfg: &RawConfig, units: Units) -> Result<SpectrumRun, CliError> {
    let run = SpectrumRun {
        delta_min: units.rate(cfg.require_f64("run.spectrum.delta_min")?),
        delta_max: units.rate(cfg.require_f64("run.spectrum.delta_max")?),
        points: cfg.usize_or("run.spectrum.points", 1601)?,
        threshold: cfg.f64_or("run.spectrum.threshold", 0.5)?,
    };
    if run.points < 2 {
        return Err(config_error("run.spectrum.points must be at least 2"));
    }
    if !(run.delta_min < run.delta_max) {
        return Err(config_error("run.spectrum.delta_min must be below delta_max"));
    }
    Ok(run)
}

/// Parameters of a `wavepacket` run (all in κ_i = 1, v_g = 1 units).
pub struct WavepacketRun {
    pub mode: WavepacketMode,
    pub bandwidth_kappa: f64,
    pub direction: PulseDirection,
    pub n_modes: usize,
    pub domain_length: f64,
    pub offset: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WavepacketMode {
    Propagate,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseDirection {
    Both,
    Forward,
    Backward,
}

pub fn wavepacket_run(cfg: &RawConfig, params: &SystemParams) -> Result<WavepacketRun, CliError> {
    let mode = match cfg.string("run.wavepacket.mode").as_deref() {
        None | Some("propagate") => WavepacketMode::Propagate,
        Some("spectrum") => WavepacketMode::Spectrum,
        Some(other) => {
            return Err(config_error(format!(
                "run.wavepacket.mode must be `propagate` or `spectrum`, got `{other}`"
            )))
        }
    };
    let kappa_over_ki = (params.kappa_i + params.kappa_ex) / params.kappa_i;
    let default_bw = match mode {
        WavepacketMode::Propagate => 0.2,
        // Broad pulse covering several linewidths for spectrum extraction.
        WavepacketMode::Spectrum => 1.5,
    };
    let bandwidth_kappa = cfg.f64_or("run.wavepacket.bandwidth_kappa", default_bw)?;
    if !(bandwidth_kappa > 0.0) {
        return Err(config_error("run.wavepacket.bandwidth_kappa must be positive"));
    }
    let tau = 1.0 / (bandwidth_kappa * kappa_over_ki);
    let offset = cfg.f64_or("run.wavepacket.offset", 5.0 * tau)?;
    let t_end = cfg.f64_or("run.wavepacket.t_end", 2.0 * offset + 10.0)?;
    let domain_length = cfg.f64_or("run.wavepacket.domain_length", t_end + 2.0 * offset)?;
    let direction = match cfg.string("run.wavepacket.direction").as_deref() {
        None | Some("both") => PulseDirection::Both,
        Some("forward") => PulseDirection::Forward,
        Some("backward") => PulseDirection::Backward,
        Some(other) => {
            return Err(config_error(format!(
                "run.wavepacket.direction must be both|forward|backward, got `{other}`"
            )))
        }
    };
    Ok(WavepacketRun {
        mode,
        bandwidth_kappa,
        direction,
        n_modes: cfg.usize_or("run.wavepacket.n_modes", 2048)?,
        domain_length,
        offset,
        t_end,
        sample_interval: cfg.f64_or("run.wavepacket.sample_interval", t_end / 200.0)?,
        snapshot_times: cfg.f64_list("run.wavepacket.snapshot_times")?.unwrap_or_default(),
    })
}

/// Parameters of an `emission` run.
pub struct EmissionRun {
    pub polarization: Polarization,
    pub initial_excitation: f64,
    /// t_end in units of 1/κ_i.
    pub t_end_kappa_i: f64,
    /// Optional dt override, units of 1/κ_i.
    pub dt_kappa_i: Option<f64>,
    pub preloaded_cavity: bool,
    pub max_rows: usize,
}

pub fn emission_run(cfg: &RawConfig) -> Result<EmissionRun, CliError> {
    let polarization = match cfg.string("run.emission.polarization").as_deref() {
        None | Some("sigma_plus") => Polarization::SigmaPlus,
        Some("sigma_minus") => Polarization::SigmaMinus,
        Some(other) => {
            return Err(config_error(format!(
                "run.emission.polarization must be sigma_plus|sigma_minus, got `{other}`"
            )))
        }
    };
    let preloaded_cavity = match cfg.string("run.emission.preloaded_cavity").as_deref() {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => {
            return Err(config_error(format!(
                "run.emission.preloaded_cavity must be true|false, got `{other}`"
            )))
        }
    };
    Ok(EmissionRun {
        polarization,
        initial_excitation: cfg.f64_or("run.emission.initial_excitation", 1.0)?,
        t_end_kappa_i: cfg.f64_or("run.emission.t_end_kappa_i", 40.0)?,
        dt_kappa_i: cfg.f64("run.emission.dt_kappa_i")?,
        preloaded_cavity,
        max_rows: cfg.usize_or("run.emission.max_rows", 4000)?,
    })
}

/// Swept parameter of a `sweep` run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepParameter {
    G,
    ChiralityD,
    HAbs,
    GammaQ,
    KappaEx,
}

/// Reported metric of a `sweep` run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMetric {
    Contrast,
    Loss,
    Bandwidth,
    TPlus,
    TMinus,
}

impl SweepMetric {
    pub fn column(&self) -> &'static str {
        match self {
            SweepMetric::Contrast => "contrast",
            SweepMetric::Loss => "insertion_loss_db",
            SweepMetric::Bandwidth => "bandwidth_ghz",
            SweepMetric::TPlus => "T_plus",
            SweepMetric::TMinus => "T_minus",
        }
    }
}

pub struct SweepRun {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub metric: SweepMetric,
    pub threshold: f64,
    /// Half-width of the internal detuning scan (units of κ_i) used for
    /// bandwidth evaluation.
    pub delta_span_kappa_i: f64,
    pub delta_points: usize,
}

pub fn sweep_run(cfg: &RawConfig) -> Result<SweepRun, CliError> {
    let parameter = match cfg.string("run.sweep.parameter").as_deref() {
        Some("g") => SweepParameter::G,
        Some("d") => SweepParameter::ChiralityD,
        Some("h_abs") => SweepParameter::HAbs,
        Some("gamma_q") => SweepParameter::GammaQ,
        Some("kappa_ex") => SweepParameter::KappaEx,
        Some(other) => {
            return Err(config_error(format!(
                "run.sweep.parameter must be g|d|h_abs|gamma_q|kappa_ex, got `{other}`"
            )))
        }
        None => return Err(config_error("missing required field `run.sweep.parameter`")),
    };
    let metric = match cfg.string("run.sweep.metric").as_deref() {
        Some("contrast") => SweepMetric::Contrast,
        Some("loss") => SweepMetric::Loss,
        Some("bandwidth") => SweepMetric::Bandwidth,
        Some("t_plus") => SweepMetric::TPlus,
        Some("t_minus") => SweepMetric::TMinus,
        Some(other) => {
            return Err(config_error(format!(
                "run.sweep.metric must be contrast|loss|bandwidth|t_plus|t_minus, got `{other}`"
            )))
        }
        None => return Err(config_error("missing required field `run.sweep.metric`")),
    };
    let run = SweepRun {
        parameter,
        from: cfg.require_f64("run.sweep.from")?,
        to: cfg.require_f64("run.sweep.to")?,
        steps: cfg.usize_or("run.sweep.steps", 2)?,
        metric,
        threshold: cfg.f64_or("run.sweep.threshold", 0.5)?,
        delta_span_kappa_i: cfg.f64_or("run.sweep.delta_span_kappa_i", 6.0)?,
        delta_points: cfg.usize_or("run.sweep.delta_points", 1201)?,
    };
    if run.steps < 2 {
        return Err(config_error("run.sweep.steps must be at least 2"));
    }
    if run.from == run.to {
        return Err(config_error("run.sweep.from must differ from run.sweep.to"));
    }
    Ok(run)
}

pub struct FieldRun {
    pub input: PathBuf,
}

pub fn field_run(cfg: &RawConfig) -> Result<FieldRun, CliError> {
    let input = cfg
        .string("run.field_analyze.input")
        .ok_or_else(|| config_error("missing required field `run.field_analyze.input`"))?;
    Ok(FieldRun { input: PathBuf::from(input) })
}
