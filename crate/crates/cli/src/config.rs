//! Run configuration, read from TOML or JSON.

use std::fs;
use std::path::{Path, PathBuf};

use recapture::policy::PolicyConfig;
use recapture::sare::ToyConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Bank directory, used when neither `--banks` nor the environment names one.
    pub banks: Option<PathBuf>,
    pub policy: PolicyConfig,
    pub augment: AugmentConfig,
    pub train: ToyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Largest tolerated fraction of failed records before the run exits
    /// with a data error.
    pub max_error_rate: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { max_error_rate: 0.0 }
    }
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
