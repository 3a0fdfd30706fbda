//! Row-major pixel grids and the image types built on them.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default frame width of the radiometric camera.
pub const FRAME_WIDTH: usize = 80;
/// Default frame height of the radiometric camera.
pub const FRAME_HEIGHT: usize = 60;

/// A dense `height × width` grid stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidParameter("grid dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidValue(alloc::format!(
                "grid data has {} values, expected {}x{} = {}",
                data.len(),
                width,
                height,
                expected
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    /// Value at `(row, col)` with out-of-range coordinates clamped to the border.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> &T {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_same_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

/// Radiometric temperatures in centikelvin.
///
/// Raw and window-corrected frames are nonnegative; the background residual
/// reuses the type through [`TemperatureImage::signed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureImage(Grid<f64>);

impl TemperatureImage {
    /// Builds a nonnegative temperature image.
    pub fn new(grid: Grid<f64>) -> Result<Self> {
        if let Some(v) = grid.data().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(alloc::format!(
                "temperature {v} is negative or non-finite"
            )));
        }
        Ok(Self(grid))
    }

    /// Builds a signed temperature field (temperature differences).
    pub fn signed(grid: Grid<f64>) -> Result<Self> {
        if grid.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("non-finite temperature".into()));
        }
        Ok(Self(grid))
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self(Grid::filled(width, height, value))
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.0
    }

    pub fn into_grid(self) -> Grid<f64> {
        self.0
    }
}

impl Deref for TemperatureImage {
    type Target = Grid<f64>;
    fn deref(&self) -> &Grid<f64> {
        &self.0
    }
}

/// Cloud heights in kilometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightImage(Grid<f64>);

impl HeightImage {
    pub fn new(grid: Grid<f64>) -> Result<Self> {
        if grid.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValue("height must be finite and >= 0".into()));
        }
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.0
    }
}

impl Deref for HeightImage {
    type Target = Grid<f64>;
    fn deref(&self) -> &Grid<f64> {
        &self.0
    }
}

/// 8-bit normalized intensities.
pub type IntensityImage = Grid<u8>;

/// Per-pixel labels: 0 = clear sky, 1 = cloud.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMask(Grid<u8>);

impl LabelMask {
    pub fn new(grid: Grid<u8>) -> Result<Self> {
        if let Some(v) = grid.data().iter().find(|v| **v > 1) {
            return Err(Error::InvalidValue(alloc::format!(
                "label {v} is not 0 or 1"
            )));
        }
        Ok(Self(grid))
    }

    pub fn from_bools(width: usize, height: usize, cloud: impl IntoIterator<Item = bool>) -> Result<Self> {
        let data: Vec<u8> = cloud.into_iter().map(u8::from).collect();
        Self::new(Grid::from_vec(width, height, data)?)
    }

    pub fn clear(width: usize, height: usize) -> Self {
        Self(Grid::filled(width, height, 0))
    }

    pub fn grid(&self) -> &Grid<u8> {
        &self.0
    }

    pub fn cloud_count(&self) -> usize {
        self.0.data().iter().filter(|&&v| v == 1).count()
    }

    /// Logical negation of every label.
    pub fn inverted(&self) -> Self {
        Self(self.0.map(|v| 1 - v))
    }
}

impl Deref for LabelMask {
    type Target = Grid<u8>;
    fn deref(&self) -> &Grid<u8> {
        &self.0
    }
}
