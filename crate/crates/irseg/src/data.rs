//! In-memory datasets and their feature fields.

use irseg_core::dataset::Split;
use irseg_core::features::{
    assemble, window_artifact, ClearSkyBuffer, FeatureBundle, FeatureMatrix, FeatureSpec, FramePipeline,
};
use irseg_core::model::TrainingFrame;
use irseg_core::synth::SyntheticScene;
use irseg_core::{LabelMask, SiteParams, TemperatureImage};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub name: String,
    pub frame: TemperatureImage,
    pub previous: Option<TemperatureImage>,
    pub mask: Option<LabelMask>,
    pub timestamp: i64,
    pub split: Split,
}

impl LabeledFrame {
    pub fn labels(&self) -> Option<&[u8]> {
        self.mask.as_ref().map(|m| m.data())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub site: SiteParams,
    pub frames: Vec<LabeledFrame>,
    pub clear_sky: Vec<TemperatureImage>,
}

impl Dataset {
    pub fn from_scene(scene: &SyntheticScene, site: SiteParams) -> Self {
        let frames = scene
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| LabeledFrame {
                name: format!("frame_{i:03}"),
                frame: f.frame.clone(),
                previous: Some(f.previous.clone()),
                mask: Some(f.mask.clone()),
                timestamp: f.timestamp,
                split: f.split,
            })
            .collect();
        Self {
            site,
            frames,
            clear_sky: scene.clear_sky.clone(),
        }
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.frames.len()).filter(|&i| self.frames[i].split == split).collect()
    }

    /// Preprocessing chain with the window artifact of the clear-sky set, if any.
    pub fn pipeline(&self) -> irseg_core::Result<FramePipeline> {
        let mut pipe = FramePipeline::new(self.site);
        if !self.clear_sky.is_empty() {
            let mut buffer = ClearSkyBuffer::default();
            for f in &self.clear_sky {
                buffer.push_clear(f.clone())?;
            }
            pipe = pipe.with_window(window_artifact(&buffer)?);
        }
        Ok(pipe)
    }

    /// Feature fields of every frame, in dataset order.
    pub fn features(&self) -> irseg_core::Result<FeatureSet> {
        let pipe = self.pipeline()?;
        let bundles = self
            .frames
            .par_iter()
            .map(|f| pipe.bundle(&f.frame, f.previous.as_ref()))
            .collect::<irseg_core::Result<Vec<_>>>()?;
        Ok(FeatureSet { bundles })
    }
}

#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub bundles: Vec<FeatureBundle>,
}

impl FeatureSet {
    /// Design matrices of the frames at `idx` for one feature spec.
    pub fn design(&self, spec: &FeatureSpec, idx: &[usize]) -> irseg_core::Result<Vec<FeatureMatrix>> {
        idx.par_iter().map(|&i| assemble(&self.bundles[i], spec)).collect()
    }
}

/// Pairs design matrices with the labels of the same frames.
pub fn training_frames<'a>(
    designs: &'a [FeatureMatrix],
    frames: impl IntoIterator<Item = &'a LabeledFrame>,
) -> Option<Vec<TrainingFrame<'a>>> {
    designs
        .iter()
        .zip(frames)
        .map(|(x, f)| {
            Some(TrainingFrame {
                features: x,
                labels: f.labels()?,
            })
        })
        .collect()
}
