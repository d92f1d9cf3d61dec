use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds and knobs for one pipeline run.
///
/// Loaded from JSON with exactly these keys; unknown keys are rejected and
/// missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Minimum re-grounding score for a part to survive the redundancy probe.
    pub grounding_threshold: f64,
    /// Grounding score above which an absent-detector finding is considered
    /// already present.
    pub presence_threshold: f64,
    /// IoU needed to match a grounded box to a reference box.
    pub match_iou: f64,
    /// IoU at which an absent finding is taken to be a misread redundant one.
    pub overlap_iou: f64,
    pub box_expansion_ratio: f64,
    pub max_absent_iterations: u32,
    pub enable_superresolution: bool,
    pub superresolution_factor: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grounding_threshold: 0.35,
            presence_threshold: 0.35,
            match_iou: 0.5,
            overlap_iou: 0.5,
            box_expansion_ratio: 0.15,
            max_absent_iterations: 6,
            enable_superresolution: false,
            superresolution_factor: 2,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grounding_threshold", self.grounding_threshold),
            ("presence_threshold", self.presence_threshold),
            ("match_iou", self.match_iou),
            ("overlap_iou", self.overlap_iou),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!(
                    "`{name}` must lie in (0, 1), got {v}"
                )));
            }
        }
        if !(self.box_expansion_ratio.is_finite() && self.box_expansion_ratio >= 0.0) {
            return Err(Error::Config(format!(
                "`box_expansion_ratio` must be a non-negative number, got {}",
                self.box_expansion_ratio
            )));
        }
        if self.max_absent_iterations == 0 {
            return Err(Error::Config(
                "`max_absent_iterations` must be at least 1".into(),
            ));
        }
        if self.superresolution_factor == 0 {
            return Err(Error::Config(
                "`superresolution_factor` must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.grounding_threshold, 0.35);
        assert_eq!(c.max_absent_iterations, 6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::from_json(r#"{"grounding_treshold": 0.4}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn partial_files_take_defaults() {
        let c = PipelineConfig::from_json(r#"{"overlap_iou": 0.7, "max_absent_iterations": 3}"#)
            .unwrap();
        assert_eq!(c.overlap_iou, 0.7);
        assert_eq!(c.max_absent_iterations, 3);
        assert_eq!(c.match_iou, 0.5);
    }

    #[test]
    fn out_of_range_values_fail() {
        for bad in [
            r#"{"grounding_threshold": 1.0}"#,
            r#"{"match_iou": 0}"#,
            r#"{"max_absent_iterations": 0}"#,
            r#"{"box_expansion_ratio": -0.1}"#,
            r#"{"superresolution_factor": 0}"#,
        ] {
            assert!(PipelineConfig::from_json(bad).is_err(), "{bad}");
        }
    }
}
