//! Flat TOML sweep configuration.
//!
//! ```toml
//! finesse = 188.4
//! opa_gain = 3.5e7
//! opa_theta = 0.0
//! delta0_start = 5e7
//! delta0_stop = 1e8
//! delta0_steps = 200
//! ```
//!
//! Physical keys left out take the reference values of
//! [`SystemConfig::reference`]. Units are spelled out in the key names.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::params::{CothMode, OpaParams, SystemConfig};
use crate::sweep::{BranchPolicy, OmegaGrid, OutputTarget, SpectrumDump, SweepConfig};

const KEYS: &[&str] = &[
    "mass_ng",
    "omega_m_khz",
    "quality",
    "length_mm",
    "finesse",
    "wavelength_nm",
    "power_mw",
    "opa_gain",
    "opa_theta",
    "bath_temperature_k",
    "coth_mode",
    "delta0_start",
    "delta0_stop",
    "delta0_steps",
    "branch_policy",
    "output_csv",
    "output_json",
    "spectrum_delta0",
    "spectrum_omega_start",
    "spectrum_omega_stop",
    "spectrum_omega_steps",
    "quad_tol",
    "root_samples",
];

/// Line of the first `key = ...` assignment in `text`, 1-based.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        })
        .map(|i| i + 1)
}

fn offset_line(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Reader<'a> {
    text: &'a str,
    table: &'a Table,
}

impl Reader<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            field: key.to_string(),
            message: message.into(),
            line: key_line(self.text, key),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(self.err(key, format!("expected a number, got {}", v.type_str()))),
        }
    }

    fn required_float(&self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| self.err(key, "missing required key"))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => Err(self.err(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("expected a string, got {}", v.type_str()))),
        }
    }
}

/// Maps a validation failure on an internal field back to its TOML key.
fn toml_key(field: &str) -> &str {
    match field {
        "mass" => "mass_ng",
        "omega_m" => "omega_m_khz",
        "length" => "length_mm",
        "wavelength" => "wavelength_nm",
        "power" => "power_mw",
        "bath_temperature" => "bath_temperature_k",
        other => other,
    }
}

/// Parses a sweep configuration. Relative output paths are kept as written.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        field: "toml".to_string(),
        message: e.message().to_string(),
        line: e.span().map(|s| offset_line(text, s.start)),
    })?;
    let r = Reader { text, table: &table };

    for (key, value) in &table {
        if !KEYS.contains(&key.as_str()) {
            return Err(r.err(key, "unknown key"));
        }
        if value.is_table() || value.is_array() {
            return Err(r.err(key, "nested values are not supported"));
        }
    }

    let mut system = SystemConfig::reference(r.required_float("finesse")?);
    if let Some(x) = r.float("mass_ng")? {
        system.mirror.mass = x * 1e-12;
    }
    if let Some(x) = r.float("omega_m_khz")? {
        system.mirror.omega_m = 2.0 * PI * x * 1e3;
    }
    if let Some(x) = r.float("quality")? {
        system.mirror.quality = x;
    }
    if let Some(x) = r.float("length_mm")? {
        system.cavity.length = x * 1e-3;
    }
    if let Some(x) = r.float("wavelength_nm")? {
        system.drive.wavelength = x * 1e-9;
    }
    if let Some(x) = r.float("power_mw")? {
        system.drive.power = x * 1e-3;
    }
    let gain = r.float("opa_gain")?.unwrap_or(0.0);
    let theta = r.float("opa_theta")?.unwrap_or(0.0);
    if !theta.is_finite() {
        return Err(r.err("opa_theta", "must be finite"));
    }
    system.opa = OpaParams::new(gain, theta);
    if let Some(x) = r.float("bath_temperature_k")? {
        system.bath.temperature = x;
    }
    system.bath.coth_mode = match r.string("coth_mode")? {
        None | Some("high_temperature") => CothMode::HighTemperature,
        Some("exact") => CothMode::Exact,
        Some(other) => {
            return Err(r.err(
                "coth_mode",
                format!("expected \"high_temperature\" or \"exact\", got {other:?}"),
            ))
        }
    };
    if let Err(Error::Config { field, message, .. }) = system.validate() {
        let key = toml_key(&field);
        return Err(r.err(key, message));
    }

    let mut cfg = SweepConfig::new(
        system,
        r.required_float("delta0_start")?,
        r.required_float("delta0_stop")?,
        r.count("delta0_steps")?
            .ok_or_else(|| r.err("delta0_steps", "missing required key"))?,
    );
    cfg.branch_policy = match r.string("branch_policy")? {
        None | Some("lowest_chi_qs") => BranchPolicy::LowestChiQs,
        Some("all_stable") => BranchPolicy::AllStable,
        Some(other) => {
            return Err(r.err(
                "branch_policy",
                format!("expected \"lowest_chi_qs\" or \"all_stable\", got {other:?}"),
            ))
        }
    };
    if let Some(p) = r.string("output_csv")? {
        cfg.outputs.push(OutputTarget::Csv(PathBuf::from(p)));
    }
    if let Some(p) = r.string("output_json")? {
        cfg.outputs.push(OutputTarget::Json(PathBuf::from(p)));
    }
    if let Some(tol) = r.float("quad_tol")? {
        cfg.quad.tol = tol;
    }
    if let Some(n) = r.count("root_samples")? {
        cfg.search.samples = n;
    }

    if let Some(delta0) = r.float("spectrum_delta0")? {
        let grid = OmegaGrid {
            start: r.float("spectrum_omega_start")?.unwrap_or(0.0),
            stop: r.float("spectrum_omega_stop")?.unwrap_or(4.0 * system.mirror.omega_m),
            steps: r.count("spectrum_omega_steps")?.unwrap_or(1000),
        };
        if grid.stop.partial_cmp(&grid.start) != Some(std::cmp::Ordering::Greater) || grid.steps < 2 {
            return Err(r.err(
                "spectrum_omega_stop",
                "frequency grid needs stop > start and at least two steps",
            ));
        }
        cfg.spectrum_dump = Some(SpectrumDump { delta0, grid });
    }

    if let Err(Error::Config { field, message, .. }) = cfg.validate() {
        let key = toml_key(&field);
        return Err(r.err(key, message));
    }
    Ok(cfg)
}

/// Reads and parses a configuration file. Relative output paths resolve
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for out in &mut cfg.outputs {
        let p = match out {
            OutputTarget::Csv(p) | OutputTarget::Json(p) => p,
        };
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}
