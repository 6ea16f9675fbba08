//! Experiment configuration: a domain spec plus the coefficient list, mesh resolution
//! and output settings, in the flat `key = value` format.

use std::path::{Path, PathBuf};

use thickness_core::config::KeyValues;
use thickness_core::DomainSpec;

use crate::error::{CliError, Result};

const PRESETS: [(&str, &str); 4] = [
    ("film-k0", include_str!("../presets/film-k0.cfg")),
    ("film-k1", include_str!("../presets/film-k1.cfg")),
    ("film-k2", include_str!("../presets/film-k2.cfg")),
    ("flat-box", include_str!("../presets/flat-box.cfg")),
];

const KNOWN_KEYS: [&str; 20] = [
    "preset",
    "lower.kind",
    "lower.base",
    "lower.amplitude",
    "lower.frequency",
    "lower.coefficients",
    "upper.kind",
    "upper.base",
    "upper.amplitude",
    "upper.frequency",
    "upper.coefficients",
    "film_lo",
    "film_hi",
    "a",
    "band",
    "nx",
    "ny",
    "quick.nx",
    "quick.ny",
    "out",
];

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub spec: DomainSpec<f64>,
    pub a_list: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    /// Coarse resolution used with `--quick`; defaults to a quarter of `ny`.
    pub quick: (usize, usize),
    pub band: (f64, f64),
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text).map_err(config_err)?;
        if let Some(unknown) = kv.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(CliError::Config(format!("line {}: unknown key `{unknown}`", kv.line_of(unknown))));
        }
        let spec = DomainSpec::from_key_values(&kv).map_err(config_err)?;
        let a_list: Vec<f64> = kv.parse_list("a").map_err(config_err)?;
        let band: Vec<f64> = kv.parse_list("band").map_err(config_err)?;
        let nx: usize = kv.parse_value("nx").map_err(config_err)?;
        let ny: usize = kv.parse_value("ny").map_err(config_err)?;
        let quick = (
            kv.parse_or("quick.nx", nx).map_err(config_err)?,
            kv.parse_or("quick.ny", (ny / 4).max(8)).map_err(config_err)?,
        );
        let config = Self {
            spec,
            a_list,
            nx,
            ny,
            quick,
            band: match band[..] {
                [lo, hi] => (lo, hi),
                _ => return Err(CliError::Config(format!("band needs two values, got {}", band.len()))),
            },
            out: kv.get("out").map(PathBuf::from),
            preset: kv.get("preset").map(str::to_string),
        };
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file, or a shipped preset when `source` names one and no such file exists.
    pub fn load(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if !path.exists() {
            if let Some(text) = preset_text(source) {
                return Self::parse(text);
            }
            let known: Vec<&str> = preset_names().collect();
            return Err(CliError::Config(format!(
                "`{source}` is neither a file nor a preset ({})",
                known.join(", ")
            )));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_list.is_empty() {
            return Err(CliError::Config("a list is empty".into()));
        }
        if let Some(a) = self.a_list.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(CliError::Config(format!("a must be positive, got {a}")));
        }
        if !(self.band.0 < self.band.1) {
            return Err(CliError::Config(format!("band needs lo < hi, got {:?}", self.band)));
        }
        for (nx, ny) in [(self.nx, self.ny), self.quick] {
            if nx < 4 || ny < 8 {
                return Err(CliError::Config(format!("resolution needs nx >= 4 and ny >= 8, got {nx} x {ny}")));
            }
        }
        Ok(())
    }

    pub fn resolution(&self, quick: bool) -> (usize, usize) {
        if quick {
            self.quick
        } else {
            (self.nx, self.ny)
        }
    }

    pub fn label(&self) -> &str {
        self.preset.as_deref().unwrap_or("custom")
    }
}
