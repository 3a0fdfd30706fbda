//! Temperature to cloud-height mapping.

use crate::grid::{HeightImage, TemperatureImage};
use crate::site::SiteParams;

/// Maps a pixel temperature (centikelvin) to a height (km).
///
/// Implementations must be monotone non-increasing in temperature.
pub trait HeightModel {
    fn height(&self, temperature: f64) -> f64;

    fn height_image(&self, frame: &TemperatureImage) -> HeightImage {
        // clamped models never produce negative heights
        HeightImage::new(frame.map(|&t| self.height(t))).expect("height model produced invalid height")
    }
}

/// Linear lapse-rate approximation of the moist adiabat, clamped to
/// `[site_elevation, tropopause_height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLapse {
    pub site: SiteParams,
}

impl LinearLapse {
    pub fn new(site: SiteParams) -> Self {
        Self { site }
    }
}

impl HeightModel for LinearLapse {
    fn height(&self, temperature: f64) -> f64 {
        let s = &self.site;
        let drop_kelvin = (s.surface_temperature - temperature) / 100.0;
        let h = s.site_elevation + drop_kelvin / s.lapse_rate;
        h.clamp(s.site_elevation, s.tropopause_height)
    }
}

/// Height image of `frame` under the linear lapse model.
pub fn malr_height(frame: &TemperatureImage, site: &SiteParams) -> HeightImage {
    LinearLapse::new(*site).height_image(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn frame(v: f64) -> TemperatureImage {
        TemperatureImage::constant(80, 60, v)
    }

    #[test]
    fn surface_temperature_maps_to_site_elevation() {
        let s = SiteParams::default();
        let h = malr_height(&frame(s.surface_temperature), &s);
        assert!(h.data().iter().all(|&v| v == 1.52));
    }

    #[test]
    fn one_kilometer_per_lapse_drop() {
        let s = SiteParams::default();
        let h = malr_height(&frame(s.surface_temperature - 980.0), &s);
        assert!(h.data().iter().all(|&v| (v - 2.52).abs() < 1e-12));
    }

    #[test]
    fn clamps_at_tropopause() {
        let s = SiteParams::default();
        let h = malr_height(&frame(s.surface_temperature - 9780.4), &s);
        assert!(h.data().iter().all(|&v| (v - 11.5).abs() < 1e-9));
        let h = malr_height(&frame(0.0), &s);
        assert!(h.data().iter().all(|&v| v == 11.5));
        let h = malr_height(&frame(s.surface_temperature + 5000.0), &s);
        assert!(h.data().iter().all(|&v| v == 1.52));
    }

    #[test]
    fn monotone_in_temperature() {
        let s = SiteParams::default();
        let g = Grid::from_fn(50, 1, |_, c| 15_000.0 + 400.0 * c as f64);
        let h = malr_height(&TemperatureImage::new(g).unwrap(), &s);
        assert!(h.data().windows(2).all(|w| w[0] >= w[1]));
    }
}
