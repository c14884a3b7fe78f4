//! JSON toolkit configuration.
//!
//! Every field is optional. Keys beginning with `_` are ignored so files can
//! carry inline notes; any other unknown key is an error. Relative paths are
//! resolved against the directory holding the config file.
//!
//! ```json
//! {
//!   "host": "../assets/host.png",
//!   "watermark": "../assets/watermark.png",
//!   "key": 2012,
//!   "params": { "q": 16, "band": "hl", "window": 8, "window_order": "raster",
//!               "texture_offset": 0, "alpha_bounds": [2.0, 7.2] },
//!   "fuzzy": { "input_terms": [...], "output_terms": [...], "rules": [...] },
//!   "attacks": ["jpeg:10", "median:3", "crop:0.05", "sp:0.05:seed=1", "rot:4"],
//!   "peak": 255,
//!   "out": "../out",
//!   "formats": ["csv", "markdown"],
//!   "timing": false
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attacks::AttackSpec;
use crate::codec::EmbedParams;
use crate::error::{Error, Result};
use crate::fuzzy::FuzzySystem;
use crate::metrics::PeakMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    #[serde(alias = "md")]
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolkitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub host: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub watermark: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<u64>,
    pub params: EmbedParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzzy: Option<FuzzySystem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attacks: Option<Vec<AttackSpec>>,
    pub peak: PeakMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
    pub timing: bool,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        Self {
            host: None,
            watermark: None,
            key: None,
            params: EmbedParams::default(),
            fuzzy: None,
            attacks: None,
            peak: PeakMode::Standard,
            out: None,
            formats: vec![ReportFormat::Csv, ReportFormat::Markdown],
            timing: false,
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "host",
    "watermark",
    "key",
    "params",
    "fuzzy",
    "attacks",
    "peak",
    "out",
    "formats",
    "timing",
];
const PARAM_KEYS: &[&str] = &[
    "q",
    "band",
    "window",
    "window_order",
    "texture_offset",
    "alpha_bounds",
];

fn check_keys(obj: &serde_json::Value, allowed: &[&str], section: &str) -> Result<()> {
    if let Some(map) = obj.as_object() {
        for k in map.keys() {
            if !k.starts_with('_') && !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key '{k}' in {section}")));
            }
        }
    }
    Ok(())
}

impl ToolkitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        check_keys(&value, TOP_KEYS, "config")?;
        if let Some(p) = value.get("params") {
            check_keys(p, PARAM_KEYS, "params")?;
        }
        strip_notes(&mut value);
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.host, &mut cfg.watermark, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The configured fuzzy system, or the standard one over the parameters'
    /// strength bounds.
    pub fn fuzzy_system(&self) -> Result<FuzzySystem> {
        match &self.fuzzy {
            Some(fs) => Ok(fs.clone()),
            None => self.params.default_fuzzy(),
        }
    }

    pub fn attack_grid(&self) -> Vec<AttackSpec> {
        self.attacks
            .clone()
            .unwrap_or_else(AttackSpec::default_grid)
    }
}

fn strip_notes(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.starts_with('_'));
            map.values_mut().for_each(strip_notes);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_notes),
        _ => {}
    }
}
