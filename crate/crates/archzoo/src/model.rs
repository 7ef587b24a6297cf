//! Serialized trained models.

use std::fs;
use std::path::Path;

use datagen::ScalingSet;
use refmat::MaterialId;
use serde::{Deserialize, Serialize};

use crate::config::ArchConfig;
use crate::error::ArchError;

/// Everything needed to reproduce a model's predictions: configuration,
/// scaling, parameters and a short record of how training went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub material: MaterialId,
    pub config: ArchConfig,
    pub scaling: ScalingSet,
    pub seed: u64,
    pub params: Vec<f64>,
    /// Total loss at logged iterations, ending with the accepted value.
    pub loss_log: Vec<f64>,
    pub iterations: usize,
}

impl TrainedModel {
    pub fn validate(&self) -> Result<(), ArchError> {
        self.config.validate()?;
        if self.params.len() != self.config.n_params() {
            return Err(ArchError::Checkpoint(format!(
                "model stores {} parameters, configuration needs {}",
                self.params.len(),
                self.config.n_params()
            )));
        }
        if !self.params.iter().all(|p| p.is_finite()) {
            return Err(ArchError::Checkpoint(
                "model stores non-finite parameters".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ArchError> {
        serde_json::to_string_pretty(self).map_err(|e| ArchError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ArchError> {
        let model: TrainedModel =
            serde_json::from_str(text).map_err(|e| ArchError::Checkpoint(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn write_json_file(&self, path: &Path) -> Result<(), ArchError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json_file(path: &Path) -> Result<Self, ArchError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
