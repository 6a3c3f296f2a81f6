use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{FitConfig, FitReport, LinearModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCoefficient {
    pub name: String,
    pub value: f64,
}

/// Column statistics the model was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEcho {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

/// On-disk model. Coefficients are on the raw marker scale, so the file can
/// score raw data directly; `standardization` records the statistics used
/// during fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub intercept: f64,
    pub coefficients: Vec<NamedCoefficient>,
    pub standardization: ScaleEcho,
    pub config: FitConfig,
}

impl ModelFile {
    pub fn from_report(
        report: &FitReport,
        marker_names: &[String],
        config: &FitConfig,
    ) -> Result<Self> {
        if marker_names.len() != report.model.n_markers() {
            return Err(Error::DimensionMismatch {
                expected: report.model.n_markers(),
                found: marker_names.len(),
            });
        }
        Ok(ModelFile {
            intercept: report.model.intercept,
            coefficients: marker_names
                .iter()
                .zip(report.model.coefficients.iter())
                .map(|(name, &value)| NamedCoefficient {
                    name: name.clone(),
                    value,
                })
                .collect(),
            standardization: ScaleEcho {
                means: report.standardization.means.clone(),
                scales: report.standardization.scales.clone(),
            },
            config: config.clone(),
        })
    }

    pub fn marker_names(&self) -> Vec<String> {
        self.coefficients.iter().map(|c| c.name.clone()).collect()
    }

    pub fn model(&self) -> LinearModel {
        LinearModel {
            intercept: self.intercept,
            coefficients: Array1::from_iter(self.coefficients.iter().map(|c| c.value)),
            on_standardized_scale: false,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_string(self)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
