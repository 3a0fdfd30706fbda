//! Versioned JSON documents for fitted models and voting ensembles.

use std::path::Path;

use irseg_core::features::FramePipeline;
use irseg_core::model::SegmentationModel;
use irseg_core::{Grid, SiteParams, TemperatureImage};
use serde::{Deserialize, Serialize};

use crate::atomic::{read_json, write_json};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// A fitted model together with the preprocessing it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub model: SegmentationModel,
    pub site: SiteParams,
    /// Window artifact removed from every frame, if any.
    pub window: Option<Grid<f64>>,
}

impl ModelFile {
    pub fn new(model: SegmentationModel, pipeline: &FramePipeline) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model,
            site: pipeline.site,
            window: pipeline.window.as_ref().map(|w| w.grid().clone()),
        }
    }

    pub fn pipeline(&self) -> Result<FramePipeline> {
        let mut p = FramePipeline::new(self.site);
        if let Some(w) = &self.window {
            p = p.with_window(TemperatureImage::new(w.clone())?);
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw: serde_json::Value = read_json(path)?;
        check_version(&raw)?;
        serde_json::from_value(raw).map_err(|e| Error::Format {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}

fn check_version(raw: &serde_json::Value) -> Result<()> {
    let found = raw.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSubset {
    pub members: Vec<usize>,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub schema_version: u32,
    /// Member model files, as given on the command line.
    pub candidates: Vec<String>,
    /// Indices into `candidates`.
    pub members: Vec<usize>,
    pub lambda: f64,
    pub threshold: f64,
    pub validation_j: f64,
    /// Validation J of each candidate on its own, with its own tuned λ.
    pub single_j: Vec<f64>,
    pub evaluated: Vec<EvaluatedSubset>,
}

impl EnsembleFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw: serde_json::Value = read_json(path)?;
        check_version(&raw)?;
        serde_json::from_value(raw).map_err(|e| Error::Format {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}
