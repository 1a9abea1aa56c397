//! Flat key/value scenario files (TOML syntax).
//!
//! ```toml
//! sweep = "monte_carlo"        # required: theta_mis | theta_cap | distance_profile | monte_carlo
//! length_m = 25000.0           # required
//! segment_length_m = 25.0
//! n_samples = 2000
//! schemes = ["siso", "simo", "mimo"]
//! master_seed = 7
//! ```
//!
//! Every other key is optional; see [`KEYS`] for the full list. Unknown keys
//! are rejected. `snr_db = inf` disables receiver noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ProbeScheme;
use crate::experiments::{ScenarioConfig, SegmentPreset, SweepKind};
use crate::fiber::FiberSpec;
use crate::metrics::DiffMode;
use crate::noise::NoiseConfig;

/// Every accepted key, in manifest order.
pub const KEYS: &[&str] = &[
    "name",
    "sweep",
    "length_m",
    "segment_length_m",
    "alpha_db_per_km",
    "scatterers_per_segment",
    "group_index",
    "linewidth_hz",
    "dt_s",
    "n_samples",
    "snr_db",
    "theta_jitter_rad_per_sqrt_s",
    "schemes",
    "sweep_grid",
    "n_fibers",
    "master_seed",
    "diff_mode",
    "strict",
    "launch_column",
    "segment_index",
    "theta_mis",
    "preset_theta_cap",
    "preset_beta",
    "preset_gamma",
];

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    sweep: Option<SweepKind>,
    length_m: Option<f64>,
    segment_length_m: Option<f64>,
    alpha_db_per_km: Option<f64>,
    scatterers_per_segment: Option<u32>,
    group_index: Option<f64>,
    linewidth_hz: Option<f64>,
    dt_s: Option<f64>,
    n_samples: Option<usize>,
    snr_db: Option<f64>,
    theta_jitter_rad_per_sqrt_s: Option<f64>,
    schemes: Option<Vec<ProbeScheme>>,
    sweep_grid: Option<Vec<f64>>,
    n_fibers: Option<usize>,
    master_seed: Option<u64>,
    diff_mode: Option<DiffMode>,
    strict: Option<bool>,
    launch_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    segment_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_mis: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset_theta_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset_gamma: Option<f64>,
}

/// 1-based line on which `key` is assigned, if any.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn config_error(text: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: Some(key.to_string()),
        line: line_of_key(text, key),
        message: message.into(),
    }
}

fn from_toml_error(text: &str, e: toml::de::Error) -> Error {
    let message = e.message().trim().replace('\n', " ");
    let key = message
        .split('`')
        .nth(1)
        .filter(|k| !k.is_empty())
        .map(str::to_string);
    let line = e
        .span()
        .map(|s| line_of_offset(text, s.start))
        .or_else(|| key.as_deref().and_then(|k| line_of_key(text, k)));
    Error::Config { key, line, message }
}

/// Attaches the key a validation message names (and its line) to the error.
fn attribute(text: &str, err: Error) -> Error {
    match err {
        Error::InvalidArgument(msg) => {
            let key = KEYS
                .iter()
                .filter(|k| msg.split(|c: char| !(c.is_alphanumeric() || c == '_')).any(|w| w == **k))
                .max_by_key(|k| k.len());
            match key {
                Some(k) => config_error(text, k, msg),
                None => Error::Config {
                    key: None,
                    line: None,
                    message: msg,
                },
            }
        }
        other => other,
    }
}

/// Parses and resolves a scenario from TOML text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let flat: FlatConfig = toml::from_str(text).map_err(|e| from_toml_error(text, e))?;
    let sweep = flat
        .sweep
        .ok_or_else(|| config_error(text, "sweep", "missing required key"))?;
    let length_m = flat
        .length_m
        .ok_or_else(|| config_error(text, "length_m", "missing required key"))?;

    let mut cfg = ScenarioConfig::new(sweep, length_m);
    let fd = FiberSpec::default();
    cfg.fiber = FiberSpec {
        length_m,
        segment_length_m: flat.segment_length_m.unwrap_or(fd.segment_length_m),
        alpha_db_per_km: flat.alpha_db_per_km.unwrap_or(fd.alpha_db_per_km),
        scatterers_per_segment: flat.scatterers_per_segment.unwrap_or(fd.scatterers_per_segment),
        group_index: flat.group_index.unwrap_or(fd.group_index),
    };
    let nd = NoiseConfig::default();
    cfg.noise = NoiseConfig {
        linewidth_hz: flat.linewidth_hz.unwrap_or(nd.linewidth_hz),
        dt_s: flat.dt_s.unwrap_or(nd.dt_s),
        n_samples: flat.n_samples.unwrap_or(nd.n_samples),
        snr_db: flat.snr_db.unwrap_or(nd.snr_db),
        theta_jitter_rad_per_sqrt_s: flat
            .theta_jitter_rad_per_sqrt_s
            .unwrap_or(nd.theta_jitter_rad_per_sqrt_s),
    };
    if let Some(name) = flat.name {
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(config_error(text, "name", "must be a nonempty file-name stem"));
        }
        cfg.name = name;
    }
    if let Some(schemes) = flat.schemes {
        let mut seen = Vec::new();
        for s in schemes {
            if seen.contains(&s) {
                return Err(config_error(text, "schemes", format!("`{s}` listed twice")));
            }
            seen.push(s);
        }
        cfg.schemes = seen;
    }
    if let Some(grid) = flat.sweep_grid {
        if grid.is_empty() {
            return Err(config_error(text, "sweep_grid", "must not be empty"));
        }
        if matches!(sweep, SweepKind::DistanceProfile | SweepKind::MonteCarlo) {
            return Err(config_error(text, "sweep_grid", "only used by theta_mis and theta_cap sweeps"));
        }
        cfg.sweep_grid = grid;
    }
    if let Some(n) = flat.n_fibers {
        cfg.n_fibers = n;
    }
    if let Some(seed) = flat.master_seed {
        cfg.master_seed = seed;
    }
    if let Some(mode) = flat.diff_mode {
        cfg.diff_mode = mode;
    }
    if let Some(strict) = flat.strict {
        cfg.strict = strict;
    }
    if let Some(col) = flat.launch_column {
        cfg.launch_column = col;
    }
    cfg.segment_index = flat.segment_index;
    cfg.theta_mis = flat.theta_mis;
    if cfg.theta_mis.is_some_and(|t| !t.is_finite()) {
        return Err(config_error(text, "theta_mis", "must be finite"));
    }
    cfg.preset = match (flat.preset_theta_cap, flat.preset_beta, flat.preset_gamma) {
        (None, None, None) => None,
        (Some(theta_cap), Some(beta), Some(gamma)) => {
            if ![theta_cap, beta, gamma].iter().all(|v| v.is_finite()) {
                return Err(config_error(text, "preset_theta_cap", "preset angles must be finite"));
            }
            Some(SegmentPreset { theta_cap, beta, gamma })
        }
        _ => {
            let missing = [
                ("preset_theta_cap", flat.preset_theta_cap),
                ("preset_beta", flat.preset_beta),
                ("preset_gamma", flat.preset_gamma),
            ]
            .into_iter()
            .find(|(_, v)| v.is_none())
            .map(|(k, _)| k)
            .unwrap_or("preset_theta_cap");
            return Err(Error::Config {
                key: Some(missing.to_string()),
                line: None,
                message: "preset_theta_cap, preset_beta and preset_gamma go together".into(),
            });
        }
    };
    cfg.resolve().map_err(|e| attribute(text, e))
}

pub fn parse_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Provenance written as comments at the top of a manifest.
#[derive(Debug, Clone, Default)]
pub struct ManifestInfo {
    pub tool_version: String,
    pub timestamp_unix_s: u64,
    /// Free-form lines, e.g. derived per-run seeds.
    pub notes: Vec<String>,
}

/// Serializes a resolved scenario so that [`parse_config_str`] gives it back.
pub fn emit_manifest(cfg: &ScenarioConfig, info: &ManifestInfo) -> Result<String> {
    let flat = FlatConfig {
        name: Some(cfg.name.clone()),
        sweep: Some(cfg.sweep),
        length_m: Some(cfg.fiber.length_m),
        segment_length_m: Some(cfg.fiber.segment_length_m),
        alpha_db_per_km: Some(cfg.fiber.alpha_db_per_km),
        scatterers_per_segment: Some(cfg.fiber.scatterers_per_segment),
        group_index: Some(cfg.fiber.group_index),
        linewidth_hz: Some(cfg.noise.linewidth_hz),
        dt_s: Some(cfg.noise.dt_s),
        n_samples: Some(cfg.noise.n_samples),
        snr_db: Some(cfg.noise.snr_db),
        theta_jitter_rad_per_sqrt_s: Some(cfg.noise.theta_jitter_rad_per_sqrt_s),
        schemes: Some(cfg.schemes.clone()),
        sweep_grid: (!cfg.sweep_grid.is_empty()).then(|| cfg.sweep_grid.clone()),
        n_fibers: Some(cfg.n_fibers),
        master_seed: Some(cfg.master_seed),
        diff_mode: Some(cfg.diff_mode),
        strict: Some(cfg.strict),
        launch_column: Some(cfg.launch_column),
        segment_index: cfg.segment_index,
        theta_mis: cfg.theta_mis,
        preset_theta_cap: cfg.preset.map(|p| p.theta_cap),
        preset_beta: cfg.preset.map(|p| p.beta),
        preset_gamma: cfg.preset.map(|p| p.gamma),
    };
    let body = toml::to_string(&flat).map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = String::new();
    out.push_str(&format!("# polotdr {}\n", info.tool_version));
    out.push_str(&format!("# generated_unix_s = {}\n", info.timestamp_unix_s));
    out.push_str(&format!("# master_seed = {}\n", cfg.master_seed));
    for note in &info.notes {
        out.push_str(&format!("# {note}\n"));
    }
    out.push_str(&body);
    Ok(out)
}
