//! Pipeline configuration: part intensity coding, camera, tracker options.
//!
//! JSON document; unknown keys are rejected:
//!
//! ```json
//! {
//!   "camera": { "focal_px": 500.0 },
//!   "parts": [
//!     { "id": 1, "name": "clasper", "lo": 100, "hi": 150, "min_pixels": 25 },
//!     { "id": 2, "name": "shaft", "lo": 200, "hi": 255 }
//!   ],
//!   "overlap": { "lo": 160, "hi": 190 },
//!   "tracker": {
//!     "box_mode": "quad_fit",
//!     "angle_convention": "algorithm",
//!     "depth_mode": "per_frame",
//!     "link_gap": 5,
//!     "reinit": { "area_jump": 0.5, "centroid_jump": 0.2 }
//!   },
//!   "output": { "track_csv": "track.csv" }
//! }
//! ```
//!
//! `overlap`, `tracker`, `output` and every field inside them are optional.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose3d::{AngleConvention, DepthMode, ReinitThresholds};
use crate::tracker2d::BoxMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Part identifier `k`: 1 = clasper, 2 = shaft by convention.
pub type PartId = u8;

pub const CLASPER: PartId = 1;
pub const SHAFT: PartId = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityRange {
    pub lo: u8,
    pub hi: u8,
}

impl IntensityRange {
    pub fn contains(&self, v: u8) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn overlaps(&self, other: &IntensityRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

fn default_min_pixels() -> u32 {
    25
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartConfig {
    pub id: PartId,
    #[serde(default)]
    pub name: String,
    pub lo: u8,
    pub hi: u8,
    #[serde(default = "default_min_pixels")]
    pub min_pixels: u32,
}

impl PartConfig {
    pub fn range(&self) -> IntensityRange {
        IntensityRange {
            lo: self.lo,
            hi: self.hi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub focal_px: f64,
}

impl CameraModel {
    pub fn new(focal_px: f64) -> Result<Self, ConfigError> {
        let cam = Self { focal_px };
        cam.validate()?;
        Ok(cam)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "camera.focal_px must be a positive number, got {}",
                self.focal_px
            )));
        }
        Ok(())
    }
}

fn default_link_gap() -> u32 {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerOptions {
    #[serde(default)]
    pub box_mode: BoxMode,
    #[serde(default)]
    pub angle_convention: AngleConvention,
    #[serde(default)]
    pub depth_mode: DepthMode,
    /// Maximum pixel gap between shaft and clasper boxes before a
    /// connectivity warning is logged.
    #[serde(default = "default_link_gap")]
    pub link_gap: u32,
    #[serde(default)]
    pub reinit: ReinitThresholds,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        Self {
            box_mode: BoxMode::default(),
            angle_convention: AngleConvention::default(),
            depth_mode: DepthMode::default(),
            link_gap: default_link_gap(),
            reinit: ReinitThresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub track_csv: String,
    pub track_json: String,
    pub boxes_csv: String,
    pub scene: String,
    pub report_txt: String,
    pub report_csv: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            track_csv: "track.csv".into(),
            track_json: "track.json".into(),
            boxes_csv: "boxes.csv".into(),
            scene: "scene.jsonl".into(),
            report_txt: "report.txt".into(),
            report_csv: "report.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub camera: CameraModel,
    pub parts: Vec<PartConfig>,
    /// Intensity range of pixels shared by two linked parts; such pixels are
    /// added to every part's mask.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<IntensityRange>,
    #[serde(default)]
    pub tracker: TrackerOptions,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Config {
    pub fn from_json_str(text: &str, context: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            context: context.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn part(&self, id: PartId) -> Option<&PartConfig> {
        self.parts.iter().find(|p| p.id == id)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.camera.validate()?;
        if self.parts.is_empty() {
            return Err(ConfigError::Invalid("parts must not be empty".into()));
        }
        for (i, p) in self.parts.iter().enumerate() {
            if p.lo > p.hi {
                return Err(ConfigError::Invalid(format!(
                    "parts[{i}]: lo {} exceeds hi {}",
                    p.lo, p.hi
                )));
            }
            if p.min_pixels == 0 {
                return Err(ConfigError::Invalid(format!(
                    "parts[{i}].min_pixels must be >= 1"
                )));
            }
            for q in &self.parts[..i] {
                if q.id == p.id {
                    return Err(ConfigError::Invalid(format!("duplicate part id {}", p.id)));
                }
                if q.range().overlaps(&p.range()) {
                    return Err(ConfigError::Invalid(format!(
                        "intensity ranges of parts {} [{}, {}] and {} [{}, {}] overlap",
                        q.id, q.lo, q.hi, p.id, p.lo, p.hi
                    )));
                }
            }
            if let Some(ov) = &self.overlap {
                if ov.overlaps(&p.range()) {
                    return Err(ConfigError::Invalid(format!(
                        "overlap range [{}, {}] intersects part {}",
                        ov.lo, ov.hi, p.id
                    )));
                }
            }
        }
        if let Some(ov) = &self.overlap {
            if ov.lo > ov.hi {
                return Err(ConfigError::Invalid("overlap.lo exceeds overlap.hi".into()));
            }
        }
        let r = &self.tracker.reinit;
        if !(r.area_jump > 0.0 && r.area_jump.is_finite()) {
            return Err(ConfigError::Invalid(
                "tracker.reinit.area_jump must be > 0".into(),
            ));
        }
        if !(r.centroid_jump > 0.0 && r.centroid_jump.is_finite()) {
            return Err(ConfigError::Invalid(
                "tracker.reinit.centroid_jump must be > 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Config::from_json_str(&text, &path.display().to_string())
}
