//! Pipeline configuration: TOML file plus environment overrides.
//!
//! Any field can be overridden with an environment variable named
//! `RADAR_EOT_<PATH>`, where nested tables are separated by a double
//! underscore, e.g. `RADAR_EOT_RLS__NUM_FILTERS=5` or
//! `RADAR_EOT_STATIC_THRESHOLD=0.3`. Values are parsed as TOML literals and
//! fall back to plain strings.

use crate::association::Gates;
use crate::clustering::DbscanParams;
use crate::error::{Error, Result};
use crate::tracker::KfConfig;
use crate::velocity::{RansacConfig, RlsConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const ENV_PREFIX: &str = "RADAR_EOT_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Points with |compensated range rate| below this are static (m/s).
    pub static_threshold: f64,
    /// Frames kept in the accumulated cloud.
    pub accumulation_depth: usize,
    /// Largest centre displacement between frames for a CAH seed (m).
    pub cah_gate: f64,
    pub distortion_correction: bool,
    /// Also run OLS and RANSAC on every cluster.
    pub baselines: bool,
    /// Fraction of clusters without a velocity that makes a run fail.
    pub max_degenerate_fraction: f64,
    /// Below this speed a box keeps its flow orientation instead of the heading.
    pub min_heading_speed: f64,
    /// Optional flow-direction file for the clustering.
    pub flow_file: Option<String>,
    pub dbscan: DbscanParams,
    pub rls: RlsConfig,
    pub ransac: RansacConfig,
    pub tracker: KfConfig,
    pub gates: Gates,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            static_threshold: 0.5,
            accumulation_depth: 3,
            cah_gate: 3.0,
            distortion_correction: true,
            baselines: true,
            max_degenerate_fraction: 0.5,
            min_heading_speed: 0.5,
            flow_file: None,
            dbscan: DbscanParams::default(),
            rls: RlsConfig::default(),
            ransac: RansacConfig::default(),
            tracker: KfConfig::default(),
            gates: Gates::default(),
        }
    }
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|sp| text[..sp.start].matches('\n').count() + 1).unwrap_or(0);
    Error::Parse { line, msg: e.message().to_string() }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.static_threshold >= 0.0) || self.accumulation_depth == 0 || !(self.cah_gate > 0.0) {
            return Err(Error::Config("static_threshold, accumulation_depth and cah_gate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.max_degenerate_fraction) {
            return Err(Error::Config("max_degenerate_fraction must lie in [0, 1]".into()));
        }
        self.dbscan.validate()?;
        self.rls.validate()?;
        self.tracker.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `RADAR_EOT_*` overrides from `vars` (typically `std::env::vars()`).
    pub fn with_overrides(&self, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut overrides: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.to_ascii_lowercase(), v)))
            .collect();
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        overrides.sort();
        let mut root = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let path: Vec<&str> = key.split("__").collect();
            let (leaf, parents) = path.split_last().expect("split yields at least one part");
            let mut table = &mut root;
            for p in parents {
                table = table
                    .get_mut(*p)
                    .and_then(toml::Value::as_table_mut)
                    .ok_or_else(|| Error::Config(format!("unknown configuration section `{p}` in {ENV_PREFIX}{}", key.to_uppercase())))?;
            }
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.clone()));
            table.insert((*leaf).to_string(), value);
        }
        let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("environment override rejected: {e}")))
    }

    /// Reads an optional file, then applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let base = match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p)?)?,
            None => Self::default(),
        };
        base.with_overrides(std::env::vars())
    }
}
