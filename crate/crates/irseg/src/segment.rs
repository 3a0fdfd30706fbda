//! Frame segmentation with the outputs the command line writes.

use std::path::Path;

use irseg_core::eval::{confusion, j_statistic, ConfusionMatrix};
use irseg_core::features::{assemble, FramePipeline};
use irseg_core::model::SegmentationModel;
use irseg_core::{LabelMask, TemperatureImage};
use serde::{Deserialize, Serialize};

use crate::atomic::write_atomic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub width: usize,
    pub height: usize,
    pub posterior: Vec<f64>,
    pub labels: Vec<u8>,
    pub score: Option<Score>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub confusion: ConfusionMatrix,
    /// `None` when the ground truth has a single class.
    pub j: Option<f64>,
    pub accuracy: f64,
}

pub fn score(truth: &[u8], labels: &[u8]) -> Result<Score> {
    let cm = confusion(truth, labels)?;
    Ok(Score {
        confusion: cm,
        j: j_statistic(&cm).ok(),
        accuracy: cm.accuracy()?,
    })
}

pub fn segment_frame(
    model: &SegmentationModel,
    pipeline: &FramePipeline,
    frame: &TemperatureImage,
    previous: Option<&TemperatureImage>,
    truth: Option<&LabelMask>,
) -> Result<SegmentationResult> {
    let x = assemble(&pipeline.bundle(frame, previous)?, &model.spec)?;
    let posterior = model.posterior(&x)?;
    let labels: Vec<u8> = posterior.iter().map(|&p| u8::from(p > model.threshold)).collect();
    let score = match truth {
        Some(t) => {
            frame.ensure_same_shape(t)?;
            Some(score(t.data(), &labels)?)
        }
        None => None,
    };
    Ok(SegmentationResult {
        width: frame.width(),
        height: frame.height(),
        posterior,
        labels,
        score,
    })
}

/// 8-bit rendering of a posterior map: gray levels for the probability,
/// with cloud-mask boundary pixels drawn in red.
pub fn render_png(path: &Path, width: usize, height: usize, posterior: &[f64], labels: &[u8]) -> Result<()> {
    let mut img = image::RgbImage::new(width as u32, height as u32);
    let at = |r: isize, c: isize| -> u8 {
        let r = r.clamp(0, height as isize - 1) as usize;
        let c = c.clamp(0, width as isize - 1) as usize;
        labels[r * width + c]
    };
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let g = (posterior[i].clamp(0.0, 1.0) * 255.0).round() as u8;
            let (ri, ci) = (r as isize, c as isize);
            let edge = labels[i] != 0
                && [(-1, 0), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .any(|&(dr, dc)| at(ri + dr, ci + dc) == 0);
            let px = if edge { [255, 0, 0] } else { [g, g, g] };
            img.put_pixel(c as u32, r as u32, image::Rgb(px));
        }
    }
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, image::ImageFormat::Png).map_err(|e| Error::Format {
        path: path.into(),
        reason: e.to_string(),
    })?;
    write_atomic(path, bytes.get_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_truth_has_no_j() {
        let s = score(&[0, 0, 0], &[0, 1, 0]).unwrap();
        assert_eq!(s.j, None);
        assert!((s.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(score(&[0, 1], &[0, 1]).unwrap().j, Some(1.0));
    }

    #[test]
    fn png_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.png");
        render_png(&p, 3, 2, &[0.0, 0.5, 1.0, 0.2, 0.9, 1.0], &[0, 1, 1, 0, 1, 1]).unwrap();
        let img = image::open(&p).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (3, 2));
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(1, 0).0, [255, 0, 0]);
    }
}
