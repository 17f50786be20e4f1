//! Run configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! schema_version = 1
//! experiment = "sr-scaling"
//! master_seed = 2024
//! output = "runs/sr-scaling"
//!
//! [params]
//! radii = [8, 16, 32]
//! n_samples = 100
//! ```
//!
//! Unknown keys are errors at every level. The `params` table is interpreted
//! by the named experiment; omitted parameters take documented defaults.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: String,
    /// Seeds are TOML integers, so at most `2⁶³ − 1`.
    pub master_seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub params: toml::Table,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { String::new() } else { path }, e.into_inner().message().trim().to_string())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        crate::experiments::experiment(&cfg.experiment)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configurations always serialize")
    }

    /// Equal up to the output location.
    pub fn same_run(&self, other: &RunConfig) -> bool {
        self.schema_version == other.schema_version
            && self.experiment == other.experiment
            && self.master_seed == other.master_seed
            && self.params == other.params
    }
}

/// Deserializes an experiment's parameter table, reporting the offending key
/// as `params.<path>`.
pub fn parse_params<T: DeserializeOwned>(params: &toml::Table) -> Result<T> {
    serde_path_to_error::deserialize(toml::Value::Table(params.clone())).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "params".to_string() } else { format!("params.{path}") };
        CliError::config(path, e.into_inner().to_string().trim().to_string())
    })
}

/// Fails with the key path when `ok` is false.
pub(crate) fn ensure(ok: bool, path: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, message))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "schema_version = 1\nexperiment = \"sr-tails\"\nmaster_seed = 3\noutput = \"out\"\n";

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml_str(&format!("{BASE}[params]\nradius = 8.0\n")).unwrap();
        assert_eq!(cfg.master_seed, 3);
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_located() {
        let err = RunConfig::from_toml_str(&format!("{BASE}colour = 1\n")).unwrap_err();
        assert!(matches!(err, CliError::Config { .. }), "{err}");
        let err = RunConfig::from_toml_str(&BASE.replace("sr-tails", "nope")).unwrap_err();
        assert!(matches!(err, CliError::Config { ref path, .. } if path == "experiment"), "{err}");
        let err = RunConfig::from_toml_str(&BASE.replace("= 1", "= 7")).unwrap_err();
        assert!(matches!(err, CliError::Config { ref path, .. } if path == "schema_version"), "{err}");
    }
}
