//! Deterministic synthetic sky scenes with ground-truth cloud masks.
//!
//! Each dataset frame is an independent capture: a cold background whose
//! level changes from frame to frame, a weak vertical gradient, warm dust
//! spots fixed on the camera window, drifting Gaussian cloud blobs and
//! sensor noise. Every frame comes with the capture one step earlier, for
//! velocity features, and a set of clear-sky frames feeds the window model.
//! Temperatures are rounded to whole centikelvin so they survive 16-bit
//! storage unchanged.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::grid::{Grid, LabelMask, TemperatureImage, FRAME_HEIGHT, FRAME_WIDTH};
use crate::site::SiteParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Leading frames tagged as training data.
    pub train_frames: usize,
    /// Dataset frames generated without clouds.
    pub clear_frames: Vec<usize>,
    /// Extra clear-sky frames for the window model.
    pub clear_sky_frames: usize,
    /// Mean background temperature, centikelvin.
    pub background: f64,
    /// Half-width of the uniform per-frame background offset.
    pub background_spread: f64,
    /// Background change from the top row to the bottom row.
    pub gradient: f64,
    pub noise_sigma: f64,
    pub min_clouds: usize,
    pub max_clouds: usize,
    pub peak_min: f64,
    pub peak_max: f64,
    /// Blob standard deviation range, pixels.
    pub radius_min: f64,
    pub radius_max: f64,
    /// Largest drift speed, pixels per frame.
    pub speed_max: f64,
    pub dust_spots: usize,
    pub dust_amplitude: f64,
    /// Cloud mask level as a fraction of `peak_min`.
    pub mask_fraction: f64,
    /// Largest cloud fraction accepted for a frame.
    pub max_coverage: f64,
    /// Unix time of the first frame, seconds.
    pub start_time: i64,
    /// Seconds between consecutive dataset frames.
    pub frame_interval: i64,
    /// Seconds between a frame and its predecessor.
    pub step_interval: i64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            width: FRAME_WIDTH,
            height: FRAME_HEIGHT,
            frames: 12,
            train_frames: 7,
            clear_frames: alloc::vec![2],
            clear_sky_frames: 9,
            background: 21_000.0,
            background_spread: 2_500.0,
            gradient: 300.0,
            noise_sigma: 25.0,
            min_clouds: 1,
            max_clouds: 3,
            peak_min: 1_500.0,
            peak_max: 5_000.0,
            radius_min: 5.0,
            radius_max: 10.0,
            speed_max: 1.5,
            dust_spots: 4,
            dust_amplitude: 800.0,
            mask_fraction: 0.1,
            max_coverage: 0.6,
            // 2024-06-01T12:00:00Z
            start_time: 1_717_243_200,
            frame_interval: 86_400,
            step_interval: 15,
        }
    }
}

impl SceneConfig {
    /// Default geometry with brighter clouds, less sensor noise and a nearly
    /// fixed background level, so the classes barely overlap.
    pub fn easy() -> Self {
        Self {
            peak_min: 3_000.0,
            noise_sigma: 10.0,
            background_spread: 200.0,
            ..Self::default()
        }
    }

    pub fn validate(&self, site: &SiteParams) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.width < 2 || self.height < 2 {
            return bad("scene must be at least 2x2");
        }
        if self.frames == 0 || self.train_frames > self.frames {
            return bad("train_frames must not exceed frames > 0");
        }
        if self.clear_frames.iter().any(|&i| i >= self.frames) {
            return bad("clear frame index out of range");
        }
        if self.min_clouds > self.max_clouds {
            return bad("min_clouds exceeds max_clouds");
        }
        if !(self.peak_min > 0.0 && self.peak_min <= self.peak_max) {
            return bad("peak range must satisfy 0 < peak_min <= peak_max");
        }
        if self.peak_max > site.feasible_delta() {
            return bad("peak_max exceeds the feasible cloud temperature range");
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max) {
            return bad("radius range must satisfy 0 < radius_min <= radius_max");
        }
        if !(self.speed_max >= 0.0 && self.speed_max < self.radius_min) {
            return bad("speed_max must be below radius_min");
        }
        if !(self.noise_sigma >= 0.0 && self.background_spread >= 0.0) {
            return bad("noise and spread must be >= 0");
        }
        if !(self.mask_fraction > 0.0 && self.mask_fraction < 1.0) {
            return bad("mask_fraction must lie in (0, 1)");
        }
        let floor = self.background - self.background_spread - self.gradient.abs() - 6.0 * self.noise_sigma;
        if floor < 0.0 {
            return bad("background too cold for nonnegative temperatures");
        }
        Ok(())
    }

    /// Absolute temperature increment above which a pixel is cloud.
    pub fn mask_level(&self) -> f64 {
        self.mask_fraction * self.peak_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub row: f64,
    pub col: f64,
    pub sigma_row: f64,
    pub sigma_col: f64,
    pub peak: f64,
    /// Drift per frame, rows and columns.
    pub velocity: (f64, f64),
}

impl Blob {
    /// Increment at `(row, col)` when the blob has moved `steps` frames.
    pub fn value(&self, row: f64, col: f64, steps: f64) -> f64 {
        let dr = (row - self.row - steps * self.velocity.0) / self.sigma_row;
        let dc = (col - self.col - steps * self.velocity.1) / self.sigma_col;
        self.peak * libm::exp(-0.5 * (dr * dr + dc * dc))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub frame: TemperatureImage,
    pub previous: TemperatureImage,
    pub mask: LabelMask,
    pub timestamp: i64,
    pub split: Split,
    pub blobs: Vec<Blob>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub frames: Vec<SyntheticFrame>,
    pub clear_sky: Vec<TemperatureImage>,
}

struct Renderer<'a> {
    cfg: &'a SceneConfig,
    dust: Grid<f64>,
    noise: Normal<f64>,
}

impl Renderer<'_> {
    fn cloud_field(&self, blobs: &[Blob], steps: f64) -> Grid<f64> {
        Grid::from_fn(self.cfg.width, self.cfg.height, |r, c| {
            blobs.iter().map(|b| b.value(r as f64, c as f64, steps)).sum()
        })
    }

    fn render(&self, offset: f64, clouds: &Grid<f64>, rng: &mut ChaCha8Rng) -> Result<TemperatureImage> {
        let cfg = self.cfg;
        let h = cfg.height as f64;
        let mut data = Vec::with_capacity(cfg.width * cfg.height);
        for r in 0..cfg.height {
            let bg = cfg.background + offset + cfg.gradient * (r as f64 / (h - 1.0) - 0.5);
            for c in 0..cfg.width {
                let n = if cfg.noise_sigma > 0.0 { self.noise.sample(rng) } else { 0.0 };
                let v = bg + self.dust.get(r, c) + clouds.get(r, c) + n;
                data.push(libm::round(v.clamp(0.0, 65_535.0)));
            }
        }
        TemperatureImage::new(Grid::from_vec(cfg.width, cfg.height, data)?)
    }
}

fn draw_blobs(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Vec<Blob> {
    let count = rng.random_range(cfg.min_clouds..=cfg.max_clouds);
    (0..count)
        .map(|_| {
            let sigma_row = rng.random_range(cfg.radius_min..=cfg.radius_max);
            let sigma_col = rng.random_range(cfg.radius_min..=cfg.radius_max);
            let speed = rng.random_range(0.0..=cfg.speed_max);
            let angle = rng.random_range(0.0..core::f64::consts::TAU);
            Blob {
                row: rng.random_range(0.0..cfg.height as f64),
                col: rng.random_range(0.0..cfg.width as f64),
                sigma_row,
                sigma_col,
                peak: rng.random_range(cfg.peak_min..=cfg.peak_max),
                velocity: (speed * libm::sin(angle), speed * libm::cos(angle)),
            }
        })
        .collect()
}

const MAX_REDRAWS: usize = 64;

/// Generates the dataset frames, their predecessors and the clear-sky set.
pub fn generate(cfg: &SceneConfig, site: &SiteParams) -> Result<SyntheticScene> {
    cfg.validate(site)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|_| Error::InvalidParameter("noise_sigma".into()))?;
    let spots: Vec<(f64, f64, f64)> = (0..cfg.dust_spots)
        .map(|_| {
            (
                rng.random_range(0.0..cfg.height as f64),
                rng.random_range(0.0..cfg.width as f64),
                rng.random_range(1.0..2.5),
            )
        })
        .collect();
    let dust = Grid::from_fn(cfg.width, cfg.height, |r, c| {
        spots
            .iter()
            .map(|&(sr, sc, s)| {
                let (dr, dc) = (r as f64 - sr, c as f64 - sc);
                let d2 = (dr * dr + dc * dc) / (s * s);
                cfg.dust_amplitude * libm::exp(-0.5 * d2)
            })
            .sum()
    });
    let renderer = Renderer { cfg, dust, noise };
    let level = cfg.mask_level();
    let n_px = (cfg.width * cfg.height) as f64;

    let mut frames = Vec::with_capacity(cfg.frames);
    for k in 0..cfg.frames {
        let offset = rng.random_range(-cfg.background_spread..=cfg.background_spread);
        let mut blobs = Vec::new();
        if !cfg.clear_frames.contains(&k) {
            for attempt in 0.. {
                blobs = draw_blobs(cfg, &mut rng);
                let field = renderer.cloud_field(&blobs, 0.0);
                let cover = field.data().iter().filter(|&&v| v > level).count() as f64 / n_px;
                if cover <= cfg.max_coverage || attempt == MAX_REDRAWS {
                    break;
                }
            }
        }
        let clouds = renderer.cloud_field(&blobs, 0.0);
        let before = renderer.cloud_field(&blobs, -1.0);
        let mask = LabelMask::new(clouds.map(|&v| u8::from(v > level)))?;
        let frame = renderer.render(offset, &clouds, &mut rng)?;
        let previous = renderer.render(offset, &before, &mut rng)?;
        frames.push(SyntheticFrame {
            frame,
            previous,
            mask,
            timestamp: cfg.start_time + k as i64 * cfg.frame_interval,
            split: if k < cfg.train_frames { Split::Train } else { Split::Test },
            blobs,
        });
    }
    let empty = Grid::filled(cfg.width, cfg.height, 0.0);
    let mut clear_sky = Vec::with_capacity(cfg.clear_sky_frames);
    for _ in 0..cfg.clear_sky_frames {
        let offset = rng.random_range(-cfg.background_spread..=cfg.background_spread);
        clear_sky.push(renderer.render(offset, &empty, &mut rng)?);
    }
    Ok(SyntheticScene { frames, clear_sky })
}

/// Cloud fraction of each mask.
pub fn coverage<'a>(masks: impl IntoIterator<Item = &'a LabelMask>) -> Vec<f64> {
    masks
        .into_iter()
        .map(|m| {
            if m.is_empty() {
                0.0
            } else {
                m.cloud_count() as f64 / m.len() as f64
            }
        })
        .collect()
}
