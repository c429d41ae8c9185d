//! Optional TOML experiment file. Every table is optional and every key
//! inside a table defaults to the library default; command-line flags
//! override file values.
//!
//! ```toml
//! [planner]          # PlannerConfig
//! iterations = 20000
//! turning_radius = 2.5
//! sample_spacing = 0.5
//! max_slope_deg = 25.0
//! seed = 7
//!
//! [crater]           # CraterSpec for gen-crater and plan without --dem
//! diameter = 400.0
//! depth = 70.0
//!
//! [sim]              # SimWorld
//! ground_mu = 0.7
//! tick = 0.002
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use slopewalk::planner::PlannerConfig;
use slopewalk::sim::SimWorld;
use slopewalk::terrain::CraterSpec;

use crate::UsageError;

pub const CONFIG_ENV: &str = "SLOPEWALK_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub planner: PlannerConfig<f64>,
    pub crater: CraterSpec<f64>,
    pub sim: SimWorld<f64>,
}

/// Loaded config plus the file it came from, if any.
pub struct Loaded {
    pub config: FileConfig,
    pub path: Option<PathBuf>,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded {
            config: FileConfig::default(),
            path: None,
        });
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let config = toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    Ok(Loaded {
        config,
        path: Some(path.to_path_buf()),
    })
}
