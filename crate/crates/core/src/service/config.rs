//! Service configuration: TOML file, then `SIGNLINK_*` environment overrides.
//!
//! ```toml
//! host = "127.0.0.1"
//! port = 8765
//! model = "model.lstm"
//! sentences = "sentences.txt"      # optional, bundled table otherwise
//! record_dir = "sessions"          # optional, records inbound streams
//! vocabulary = ["not_signing", "blood", ...]   # optional, checked against the model
//!
//! [pipeline]
//! landmarks = 129
//! window = 30
//! stride = 1
//!
//! [segmentation]
//! time_threshold_s = 5.0
//! min_count = 5
//! confidence_floor = 0.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::landmark::{DEFAULT_LANDMARKS, DEFAULT_WINDOW};
use crate::segmentation::SegmentationConfig;

use super::session::PipelineConfig;

pub const DEFAULT_PORT: u16 = 8765;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub landmarks: usize,
    pub window: usize,
    pub stride: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            landmarks: DEFAULT_LANDMARKS,
            window: DEFAULT_WINDOW,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub model: Option<PathBuf>,
    pub sentences: Option<PathBuf>,
    pub record_dir: Option<PathBuf>,
    pub vocabulary: Option<Vec<String>>,
    pub pipeline: PipelineSection,
    pub segmentation: SegmentationConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            model: None,
            sentences: None,
            record_dir: None,
            vocabulary: None,
            pipeline: PipelineSection::default(),
            segmentation: SegmentationConfig::default(),
        }
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}={value:?} is not a valid value")))
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `SIGNLINK_*` overrides read through `lookup`.
    pub fn apply_env<F: Fn(&str) -> Option<String>>(&mut self, lookup: F) -> Result<()> {
        let get = |k: &str| lookup(k).filter(|v| !v.is_empty());
        if let Some(v) = get("SIGNLINK_HOST") {
            self.host = v;
        }
        if let Some(v) = get("SIGNLINK_PORT") {
            self.port = parse_env("SIGNLINK_PORT", &v)?;
        }
        if let Some(v) = get("SIGNLINK_MODEL") {
            self.model = Some(v.into());
        }
        if let Some(v) = get("SIGNLINK_SENTENCES") {
            self.sentences = Some(v.into());
        }
        if let Some(v) = get("SIGNLINK_RECORD_DIR") {
            self.record_dir = Some(v.into());
        }
        if let Some(v) = get("SIGNLINK_VOCABULARY") {
            self.vocabulary = Some(v.split(',').map(|s| s.trim().to_owned()).collect());
        }
        if let Some(v) = get("SIGNLINK_LANDMARKS") {
            self.pipeline.landmarks = parse_env("SIGNLINK_LANDMARKS", &v)?;
        }
        if let Some(v) = get("SIGNLINK_WINDOW") {
            self.pipeline.window = parse_env("SIGNLINK_WINDOW", &v)?;
        }
        if let Some(v) = get("SIGNLINK_STRIDE") {
            self.pipeline.stride = parse_env("SIGNLINK_STRIDE", &v)?;
        }
        if let Some(v) = get("SIGNLINK_TIME_THRESHOLD_S") {
            self.segmentation.time_threshold_s = parse_env("SIGNLINK_TIME_THRESHOLD_S", &v)?;
        }
        if let Some(v) = get("SIGNLINK_MIN_COUNT") {
            self.segmentation.min_count = parse_env("SIGNLINK_MIN_COUNT", &v)?;
        }
        if let Some(v) = get("SIGNLINK_CONFIDENCE_FLOOR") {
            self.segmentation.confidence_floor = parse_env("SIGNLINK_CONFIDENCE_FLOOR", &v)?;
        }
        Ok(())
    }

    /// File (if any) then process environment.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            landmarks: self.pipeline.landmarks,
            window: self.pipeline.window,
            stride: self.pipeline.stride,
            segmentation: self.segmentation,
        }
    }
}
