//! Run configuration, read from TOML.
//!
//! ```toml
//! dataset = "sdd"                  # or "ind"
//! inputs = ["data/sdd"]            # raw annotation paths, used by `ingest`
//! store = "store"                  # trajectory store directory
//! registry = "registry.toml"       # optional; built-in registry otherwise
//! sdd_split = "split.toml"         # optional split assignment for SDD videos
//! export_format = "csv"            # or "jsonl"
//! delta = 0.98
//!
//! [preprocess]
//! lost_policy = "filter_keep_first"
//!
//! [rho]
//! alpha = 0.3
//!
//! [mi]
//! bandwidths = [64.0, 128.0, 256.0, 512.0]
//!
//! [splits]
//! max_frame_gap = 60
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aim::{AimParams, BufferRule, RhoConfig};
use crate::analytics::SplitGates;
use crate::dataset_io::{load_registry, DatasetKind, DatasetRegistry};
use crate::error::{Error, Result};
use crate::mi_edge::MiConfig;
use crate::preprocess::PreprocessConfig;
use crate::report::ExportFormat;

fn default_delta() -> f64 {
    0.98
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub store: Option<PathBuf>,
    #[serde(default)]
    pub registry: Option<PathBuf>,
    #[serde(default)]
    pub sdd_split: Option<PathBuf>,
    #[serde(default)]
    pub export_format: ExportFormat,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub buffer: BufferRule,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub rho: RhoConfig,
    #[serde(default)]
    pub mi: MiConfig,
    #[serde(default)]
    pub splits: SplitGates,
}

impl RunConfig {
    pub fn new(dataset: DatasetKind) -> Self {
        RunConfig {
            dataset,
            inputs: Vec::new(),
            store: None,
            registry: None,
            sdd_split: None,
            export_format: ExportFormat::default(),
            delta: default_delta(),
            buffer: BufferRule::default(),
            preprocess: PreprocessConfig::default(),
            rho: RhoConfig::default(),
            mi: MiConfig::default(),
            splits: SplitGates::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::in_file(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        self.store.iter_mut().for_each(fix);
        self.registry.iter_mut().for_each(fix);
        self.sdd_split.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!("delta must be in (0, 1], got {}", self.delta)));
        }
        self.preprocess.validate(self.dataset.native_rate())?;
        self.rho.validate()?;
        self.mi.validate()
    }

    /// Kinematics window in native frames.
    pub fn window(&self) -> usize {
        self.rho.window.unwrap_or_else(|| self.dataset.default_window())
    }

    pub fn aim_params(&self) -> AimParams {
        AimParams {
            delta: self.delta,
            window: self.window(),
            buffer: self.buffer,
            rho: self.rho.clone(),
            mi: self.mi.clone(),
        }
    }

    /// The configured registry (or the built-in one) with the SDD split file
    /// applied when given.
    pub fn load_registry(&self) -> Result<DatasetRegistry> {
        let mut reg = match &self.registry {
            Some(p) => load_registry(p)?,
            None => DatasetRegistry::builtin(),
        };
        if let Some(p) = &self.sdd_split {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            reg.apply_split_file(DatasetKind::Sdd, &text)
                .map_err(|e| Error::in_file(p, e))?;
        }
        Ok(reg)
    }

    pub fn store_dir(&self) -> Result<&Path> {
        self.store
            .as_deref()
            .ok_or_else(|| Error::Config("no store directory configured".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::LostPolicy;

    #[test]
    fn minimal_defaults() {
        let cfg = RunConfig::from_toml_str("dataset = \"ind\"\n").unwrap();
        assert_eq!(cfg, RunConfig::new(DatasetKind::Ind));
        assert_eq!(cfg.window(), 25);
        assert_eq!(cfg.aim_params().delta, 0.98);
    }

    #[test]
    fn full_file() {
        let text = r#"
            dataset = "sdd"
            inputs = ["raw", "/abs/raw"]
            store = "store"
            export_format = "jsonl"
            delta = 0.95
            buffer = { frames = 60 }

            [preprocess]
            lost_policy = "keep_lost"
            stride = 4

            [rho]
            alpha = 0.5
            use_v = false
            window = 20

            [mi]
            bandwidths = [8.0, 16.0]

            [splits]
            max_spatial_gap = 20.0
        "#;
        let mut cfg = RunConfig::from_toml_str(text).unwrap();
        cfg.resolve_paths(Path::new("/cfg"));
        assert_eq!(cfg.inputs, vec![PathBuf::from("/cfg/raw"), PathBuf::from("/abs/raw")]);
        assert_eq!(cfg.store_dir().unwrap(), Path::new("/cfg/store"));
        assert_eq!(cfg.export_format, ExportFormat::Jsonl);
        assert_eq!(cfg.buffer, BufferRule::Frames(60));
        assert_eq!(cfg.preprocess.lost_policy, LostPolicy::KeepLost);
        assert_eq!(cfg.window(), 20);
        assert!(!cfg.rho.use_v);
        assert_eq!(cfg.mi.bandwidths, vec![8.0, 16.0]);
        assert_eq!(cfg.splits.max_spatial_gap, 20.0);
        assert_eq!(cfg.splits.max_frame_gap, 60);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "dataset = \"xyz\"",
            "dataset = \"sdd\"\ndelta = 0.0",
            "dataset = \"sdd\"\nunknown = 1",
            "dataset = \"sdd\"\n[preprocess]\ntarget_rate = 7.0",
            "dataset = \"sdd\"\n[rho]\nalpha = -1.0",
        ] {
            assert!(
                matches!(RunConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
