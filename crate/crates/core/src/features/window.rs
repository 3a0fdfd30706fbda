//! Persistent model of the camera window: a rolling set of clear-sky frames
//! whose per-pixel median captures dust and water stains on the lens.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, TemperatureImage};

pub const DEFAULT_CAPACITY: usize = 250;
pub const DEFAULT_PERSISTENCE: usize = 3;

#[derive(Debug, Clone)]
pub struct ClearSkyBuffer {
    capacity: usize,
    persistence: usize,
    frames: VecDeque<TemperatureImage>,
    recent: VecDeque<bool>,
}

impl Default for ClearSkyBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY, DEFAULT_PERSISTENCE)
    }
}

impl ClearSkyBuffer {
    pub fn new(capacity: usize, persistence: usize) -> Self {
        assert!(capacity > 0 && persistence > 0);
        Self {
            capacity,
            persistence,
            frames: VecDeque::with_capacity(capacity),
            recent: VecDeque::with_capacity(persistence),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn frames(&self) -> impl Iterator<Item = &TemperatureImage> {
        self.frames.iter()
    }

    /// Records the sky condition of `frame` and appends the frame when the
    /// last `persistence` conditions were all clear. Returns whether the frame
    /// was appended.
    pub fn update(&mut self, frame: &TemperatureImage, is_clear: bool) -> Result<bool> {
        if let Some(first) = self.frames.front() {
            first.ensure_same_shape(frame)?;
        }
        if self.recent.len() == self.persistence {
            self.recent.pop_front();
        }
        self.recent.push_back(is_clear);
        let persistent = self.recent.len() == self.persistence && self.recent.iter().all(|&c| c);
        if !persistent {
            return Ok(false);
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame.clone());
        Ok(true)
    }

    /// Appends a frame already known to be clear, bypassing the persistence rule.
    pub fn push_clear(&mut self, frame: TemperatureImage) -> Result<()> {
        if let Some(first) = self.frames.front() {
            first.ensure_same_shape(&frame)?;
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-pixel median across the buffered clear-sky frames.
pub fn window_artifact(buffer: &ClearSkyBuffer) -> Result<TemperatureImage> {
    let first = buffer.frames.front().ok_or(Error::Empty("clear-sky buffer"))?;
    let (w, h) = first.shape();
    let mut scratch = Vec::with_capacity(buffer.len());
    let mut out = Vec::with_capacity(w * h);
    for idx in 0..w * h {
        scratch.clear();
        scratch.extend(buffer.frames.iter().map(|f| f.data()[idx]));
        out.push(median(&mut scratch));
    }
    TemperatureImage::new(Grid::from_vec(w, h, out)?)
}

/// Removes the window artifact from `frame`, re-adding the artifact's spatial
/// mean so the corrected frame keeps its absolute temperature scale.
pub fn remove_window(frame: &TemperatureImage, artifact: &TemperatureImage) -> Result<TemperatureImage> {
    frame.ensure_same_shape(artifact)?;
    let mean = artifact.data().iter().sum::<f64>() / artifact.len() as f64;
    let data = frame
        .data()
        .iter()
        .zip(artifact.data())
        .map(|(t, a)| (t - a + mean).max(0.0))
        .collect();
    TemperatureImage::new(Grid::from_vec(frame.width(), frame.height(), data)?)
}
