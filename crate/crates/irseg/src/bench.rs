//! Per-frame latency of fitted models.

use std::time::Instant;

use irseg_core::features::{assemble, FramePipeline};
use irseg_core::model::{ModelKind, SegmentationModel};
use serde::{Deserialize, Serialize};

use crate::data::LabeledFrame;
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub median_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &mut [f64]) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let median = if n % 2 == 1 {
            samples[n / 2]
        } else {
            0.5 * (samples[n / 2 - 1] + samples[n / 2])
        };
        Self {
            mean_ms: samples.iter().sum::<f64>() / n as f64,
            median_ms: median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub model: ModelKind,
    pub frames: usize,
    pub repetitions: usize,
    /// Segmentation alone, from design matrix to hard labels.
    pub predict: LatencyStats,
    /// Preprocessing and design-matrix assembly.
    pub features: LatencyStats,
    /// Preprocessing time added to segmentation time.
    pub total: LatencyStats,
}

/// Times every frame `repetitions` times on the calling thread.
pub fn bench(
    model: &SegmentationModel,
    pipeline: &FramePipeline,
    frames: &[LabeledFrame],
    repetitions: usize,
) -> Result<BenchReport> {
    if frames.is_empty() {
        return Err(Error::Data("bench needs at least one frame".into()));
    }
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be > 0".into()));
    }
    let mut predict = Vec::with_capacity(frames.len() * repetitions);
    let mut features = Vec::with_capacity(predict.capacity());
    let mut total = Vec::with_capacity(predict.capacity());
    for _ in 0..repetitions {
        for f in frames {
            let t0 = Instant::now();
            let bundle = pipeline.bundle(&f.frame, f.previous.as_ref())?;
            let x = assemble(&bundle, &model.spec)?;
            let t1 = Instant::now();
            let labels = model.classify(&x)?;
            let t2 = Instant::now();
            std::hint::black_box(labels);
            let fe = (t1 - t0).as_secs_f64() * 1e3;
            let pr = (t2 - t1).as_secs_f64() * 1e3;
            features.push(fe);
            predict.push(pr);
            total.push(fe + pr);
        }
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        model: model.kind,
        frames: frames.len(),
        repetitions,
        predict: LatencyStats::from_samples(&mut predict),
        features: LatencyStats::from_samples(&mut features),
        total: LatencyStats::from_samples(&mut total),
    })
}
