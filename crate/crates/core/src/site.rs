use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atmospheric constants of the acquisition site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiteParams {
    /// Temperature decrease with altitude, K/km.
    pub lapse_rate: f64,
    /// Average tropopause height, km above sea level.
    pub tropopause_height: f64,
    /// Site elevation, km above sea level.
    pub site_elevation: f64,
    /// Surface air temperature, centikelvin.
    pub surface_temperature: f64,
}

impl Default for SiteParams {
    fn default() -> Self {
        Self {
            lapse_rate: 9.8,
            tropopause_height: 11.5,
            site_elevation: 1.52,
            surface_temperature: 29_315.0,
        }
    }
}

impl SiteParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lapse_rate > 0.0) {
            return Err(Error::InvalidParameter("lapse_rate must be > 0".into()));
        }
        if !(self.site_elevation >= 0.0) {
            return Err(Error::InvalidParameter("site_elevation must be >= 0".into()));
        }
        if !(self.tropopause_height > self.site_elevation) {
            return Err(Error::InvalidParameter(
                "tropopause_height must exceed site_elevation".into(),
            ));
        }
        if !(self.surface_temperature.is_finite() && self.surface_temperature >= 0.0) {
            return Err(Error::InvalidParameter(
                "surface_temperature must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Largest temperature difference a cloud can show against the
    /// tropopause, in centikelvin.
    pub fn feasible_delta(&self) -> f64 {
        (self.lapse_rate * self.tropopause_height - self.lapse_rate * self.site_elevation) * 100.0
    }
}
