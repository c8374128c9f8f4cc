//! TOML run configuration.
//!
//! Top-level keys `seed`, `workers`, `out` and `format` apply to every
//! command; `[limits]`, `[pickands]` and `[simulate]` mirror the command
//! flags; `[verify]` describes experiments and their gates. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::limits::LimitsArgs;
use crate::pickands::PickandsArgs;
use crate::simulate::SimulateArgs;
use crate::verify::VerifyConfig;
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub limits: Option<LimitsArgs>,
    pub verify: Option<VerifyConfig>,
    pub pickands: Option<PickandsArgs>,
    pub simulate: Option<SimulateArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::config(format!("config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(FileConfig::parse("seed = 1\nbogus = 2\n").is_err());
        assert!(FileConfig::parse("[limits]\nfoo = 1\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let cfg = FileConfig::parse(
            r#"
seed = 9
format = "json"
[limits]
c = [1.0, 2.0]
r = [0.0]
[pickands]
alpha = 2.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.format, Some(Format::Json));
        assert_eq!(cfg.limits.unwrap().c, vec![1.0, 2.0]);
        assert_eq!(cfg.pickands.unwrap().alpha, Some(2.0));
    }
}
