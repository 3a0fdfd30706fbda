//! Frame-to-features preprocessing chain.

use crate::error::Result;
use crate::features::assemble::FeatureBundle;
use crate::features::background::{background_residual, normalize_8bit, BackgroundModel, ColdQuantile};
use crate::features::flow::{optical_flow, FlowParams, VelocityField};
use crate::features::height::{HeightModel, LinearLapse};
use crate::features::window::remove_window;
use crate::grid::{IntensityImage, TemperatureImage};
use crate::site::SiteParams;

/// Derives every feature field of a frame: heights, window correction,
/// background residual, 8-bit intensities and the velocity field against the
/// preceding frame.
#[derive(Debug, Clone)]
pub struct FramePipeline<H = LinearLapse, B = ColdQuantile> {
    pub site: SiteParams,
    pub heights: H,
    pub background: B,
    /// Window artifact (median clear-sky image); `None` leaves frames uncorrected.
    pub window: Option<TemperatureImage>,
    pub flow: FlowParams,
}

impl FramePipeline {
    pub fn new(site: SiteParams) -> Self {
        Self {
            site,
            heights: LinearLapse::new(site),
            background: ColdQuantile::default(),
            window: None,
            flow: FlowParams::default(),
        }
    }
}

impl<H: HeightModel, B: BackgroundModel> FramePipeline<H, B> {
    pub fn with_window(mut self, artifact: TemperatureImage) -> Self {
        self.window = Some(artifact);
        self
    }

    fn corrected(&self, frame: &TemperatureImage) -> Result<TemperatureImage> {
        match &self.window {
            Some(a) => remove_window(frame, a),
            None => Ok(frame.clone()),
        }
    }

    /// 8-bit intensity image of a frame.
    pub fn intensity(&self, frame: &TemperatureImage) -> Result<IntensityImage> {
        let t_prime = self.corrected(frame)?;
        let res = background_residual(&t_prime, &self.background, &self.heights)?;
        Ok(normalize_8bit(res.delta_t.grid(), &self.site))
    }

    pub fn bundle(&self, frame: &TemperatureImage, previous: Option<&TemperatureImage>) -> Result<FeatureBundle> {
        let h = self.heights.height_image(frame);
        let t_prime = self.corrected(frame)?;
        let h_prime = self.heights.height_image(&t_prime);
        let res = background_residual(&t_prime, &self.background, &self.heights)?;
        let intensity = normalize_8bit(res.delta_t.grid(), &self.site);
        let velocity = match previous {
            Some(prev) => {
                frame.ensure_same_shape(prev)?;
                optical_flow(&self.intensity(prev)?, &intensity, &self.flow)?
            }
            None => VelocityField::zeros(frame.width(), frame.height()),
        };
        Ok(FeatureBundle {
            t: Some(frame.clone()),
            h: Some(h),
            t_prime: Some(t_prime),
            h_prime: Some(h_prime),
            delta_t: Some(res.delta_t),
            h_second: Some(res.height_scaled),
            intensity: Some(intensity),
            velocity: Some(velocity),
        })
    }
}
