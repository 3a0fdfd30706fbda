//! Atmospheric background (tropopause) removal and 8-bit normalization.

use alloc::vec::Vec;

use crate::error::Result;
use crate::features::height::HeightModel;
use crate::grid::{Grid, HeightImage, IntensityImage, TemperatureImage};
use crate::site::SiteParams;

/// Estimates the tropopause temperature seen as background in a frame.
pub trait BackgroundModel {
    fn tropopause_temperature(&self, frame: &TemperatureImage) -> f64;
}

/// Background estimated as a low quantile of the frame's temperatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColdQuantile {
    pub quantile: f64,
}

impl Default for ColdQuantile {
    fn default() -> Self {
        Self { quantile: 0.05 }
    }
}

impl BackgroundModel for ColdQuantile {
    fn tropopause_temperature(&self, frame: &TemperatureImage) -> f64 {
        let mut v: Vec<f64> = frame.data().to_vec();
        v.sort_unstable_by(f64::total_cmp);
        let q = self.quantile.clamp(0.0, 1.0);
        let idx = libm::floor(q * (v.len() - 1) as f64) as usize;
        v[idx]
    }
}

/// Output of [`background_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// Signed temperature increment over the background, centikelvin.
    pub delta_t: TemperatureImage,
    /// Height below the tropopause scaled by the background temperature (km·K).
    pub height_scaled: HeightImage,
    /// Estimated background temperature, centikelvin.
    pub tropopause_temperature: f64,
}

pub fn background_residual(
    frame: &TemperatureImage,
    background: &impl BackgroundModel,
    heights: &impl HeightModel,
) -> Result<Residual> {
    let t_trop = background.tropopause_temperature(frame);
    let h_trop = heights.height(t_trop);
    let kelvin = t_trop / 100.0;
    let delta = frame.map(|&t| t - t_trop);
    let scaled = frame.map(|&t| ((h_trop - heights.height(t)) * kelvin).max(0.0));
    Ok(Residual {
        delta_t: TemperatureImage::signed(delta)?,
        height_scaled: HeightImage::new(scaled)?,
        tropopause_temperature: t_trop,
    })
}

/// Normalizes temperature increments to 8 bits: the minimum maps to 0 and the
/// site's feasible cloud temperature range spans the full scale.
pub fn normalize_8bit(delta_t: &Grid<f64>, site: &SiteParams) -> IntensityImage {
    let min = delta_t.data().iter().copied().fold(f64::INFINITY, f64::min);
    let feasible = site.feasible_delta();
    delta_t.map(|&d| {
        let r = ((d - min) / feasible).clamp(0.0, 1.0);
        libm::round(255.0 * r) as u8
    })
}
