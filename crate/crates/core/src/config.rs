//! Versioned engine configuration document.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::classify::ClassifyConfig;
use crate::feedback::FeedbackConfig;
use crate::geometry::BowConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unsupported config version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub version: u32,
    pub bow: BowConfig,
    pub feedback: FeedbackConfig,
    pub classify: ClassifyConfig,
    /// Instruction catalog file; the bundled catalog when absent.
    pub instructions_path: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            bow: BowConfig::default(),
            feedback: FeedbackConfig::default(),
            classify: ClassifyConfig::default(),
            instructions_path: None,
        }
    }
}

const BOW_KEYS: &[&str] = &["angle_tolerance_deg", "low_threshold", "high_threshold"];
const FEEDBACK_KEYS: &[&str] = &["onset_ms", "min_display_ms", "flicker_allowance_ms", "max_displayed"];
const CLASSIFY_KEYS: &[&str] = &["hand_origin_index", "min_confidence"];

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(base), Value::Object(patch)) => {
            for (k, v) in patch {
                merge(base.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        self.bow.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.feedback.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.classify.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a partial document on top of this config. Leaf keys of the
    /// `bow`, `feedback` and `classify` groups may also be given at top
    /// level, e.g. `{"angle_tolerance_deg": 20}`.
    pub fn with_overrides(&self, overrides: &Value) -> Result<Self, ConfigError> {
        let Value::Object(patch) = overrides else {
            return Err(ConfigError::Invalid("overrides must be an object".into()));
        };
        let mut grouped = Map::new();
        for (key, value) in patch {
            let group = [("bow", BOW_KEYS), ("feedback", FEEDBACK_KEYS), ("classify", CLASSIFY_KEYS)]
                .into_iter()
                .find(|(_, keys)| keys.contains(&key.as_str()))
                .map(|(g, _)| g);
            let entry = match group {
                Some(g) => {
                    let obj = grouped.entry(g).or_insert_with(|| Value::Object(Map::new()));
                    obj.as_object_mut().expect("group is an object").entry(key.clone())
                }
                None => grouped.entry(key.clone()),
            };
            merge(entry.or_insert(Value::Null), value.clone());
        }
        let mut doc = serde_json::to_value(self).expect("configs always serialize");
        merge(&mut doc, Value::Object(grouped));
        let cfg: Self = serde_json::from_value(doc).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
