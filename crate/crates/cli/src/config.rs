//! Run configuration, read from a TOML file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use scenekg::builder::BuildConfig;
use scenekg::catalog::{Catalog, CatalogConfig};
use scenekg::metrics::{ComplexityParams, NPolicy};
use serde::{Deserialize, Serialize};

use crate::{sha256_hex, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Map elements and actors farther than this from the ego are ignored, m.
    pub radius: f64,
    pub max_segment: f64,
    pub default_lane_width: f64,
    /// Fixed sufficiency threshold. When absent, the rounded mean of the
    /// non-Unknown signature counts is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Values of n for the coverage curve.
    pub n_grid: Vec<u64>,
    pub type_constants: BTreeMap<String, f64>,
    pub default_type_constant: f64,
    pub obstacle_types: BTreeSet<String>,
    pub catalog: CatalogConfig,
}

impl Default for Config {
    fn default() -> Self {
        let build = BuildConfig::default();
        let params = ComplexityParams::default();
        Config {
            radius: build.radius,
            max_segment: build.max_segment,
            default_lane_width: build.default_lane_width,
            n: None,
            n_grid: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000],
            type_constants: params.type_constants,
            default_type_constant: params.default_type_constant,
            obstacle_types: params.obstacle_types,
            catalog: CatalogConfig::default(),
        }
    }
}

/// A validated configuration and where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    /// Directory that relative pattern file paths resolve against.
    pub base: PathBuf,
}

impl LoadedConfig {
    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(LoadedConfig {
                config: Config::default(),
                base: PathBuf::from("."),
            });
        };
        let text = crate::read_input(path)?;
        let config: Config =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        config
            .validate()
            .map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base })
    }

    pub fn catalog(&self) -> Result<Catalog, CliError> {
        Catalog::from_config(&self.config.catalog, &self.base).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Hash of the canonical form, independent of file layout and comments.
    pub fn hash(&self) -> String {
        sha256_hex(toml::to_string(&self.config).expect("config serializes").as_bytes())
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("radius", self.radius),
            ("max_segment", self.max_segment),
            ("default_lane_width", self.default_lane_width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.n == Some(0) {
            return Err("n must be at least 1".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err("n_grid must be a non-empty list of positive integers".into());
        }
        if self.type_constants.values().chain([&self.default_type_constant]).any(|c| !c.is_finite()) {
            return Err("type constants must be finite".into());
        }
        Ok(())
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            radius: self.radius,
            max_segment: self.max_segment,
            default_lane_width: self.default_lane_width,
        }
    }

    pub fn params(&self) -> ComplexityParams {
        ComplexityParams {
            type_constants: self.type_constants.clone(),
            default_type_constant: self.default_type_constant,
            obstacle_types: self.obstacle_types.clone(),
        }
    }

    /// `override_n` comes from the command line and wins over the file.
    pub fn n_policy(&self, override_n: Option<u64>) -> NPolicy {
        match override_n.or(self.n) {
            Some(n) => NPolicy::Fixed(n),
            None => NPolicy::MeanOfComposites,
        }
    }

    /// Sorted, deduplicated n grid.
    pub fn grid(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self.n_grid.iter().copied().collect();
        set.into_iter().collect()
    }
}
