//! Dense velocity field by weighted Lucas–Kanade.
//!
//! Each pixel solves the 2×2 normal equations of the brightness-constancy
//! residual over a Gaussian-weighted window. The structure tensor is damped
//! by `damping · I` so flat neighborhoods resolve to zero motion.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, IntensityImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Window side length in pixels; odd and at least 3.
    pub window: usize,
    /// Standard deviation of the Gaussian window weights, pixels.
    pub sigma: f64,
    /// Tikhonov damping added to the structure tensor diagonal.
    pub damping: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            window: 7,
            sigma: 2.0,
            damping: 1e-3,
        }
    }
}

/// Per-pixel velocity `(u, v)` in pixels per frame; `u` along columns, `v`
/// along rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub u: Grid<f64>,
    pub v: Grid<f64>,
}

impl VelocityField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            u: Grid::filled(width, height, 0.0),
            v: Grid::filled(width, height, 0.0),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.u.shape()
    }

    pub fn magnitude(&self) -> Grid<f64> {
        let data = self
            .u
            .data()
            .iter()
            .zip(self.v.data())
            .map(|(u, v)| libm::sqrt(u * u + v * v))
            .collect();
        Grid::from_vec(self.u.width(), self.u.height(), data).expect("shape preserved")
    }
}

pub fn optical_flow(prev: &IntensityImage, cur: &IntensityImage, params: &FlowParams) -> Result<VelocityField> {
    prev.ensure_same_shape(cur)?;
    if params.window < 3 || params.window.is_multiple_of(2) {
        return Err(Error::InvalidParameter("flow window must be odd and >= 3".into()));
    }
    if !(params.sigma > 0.0) || !(params.damping > 0.0) {
        return Err(Error::InvalidParameter("flow sigma and damping must be > 0".into()));
    }
    let (w, h) = prev.shape();
    let mean = Grid::from_fn(w, h, |r, c| 0.5 * (*prev.get(r, c) as f64 + *cur.get(r, c) as f64));
    let ix = Grid::from_fn(w, h, |r, c| {
        let (r, c) = (r as isize, c as isize);
        0.5 * (mean.get_clamped(r, c + 1) - mean.get_clamped(r, c - 1))
    });
    let iy = Grid::from_fn(w, h, |r, c| {
        let (r, c) = (r as isize, c as isize);
        0.5 * (mean.get_clamped(r + 1, c) - mean.get_clamped(r - 1, c))
    });
    let it = Grid::from_fn(w, h, |r, c| *cur.get(r, c) as f64 - *prev.get(r, c) as f64);

    let rad = (params.window / 2) as isize;
    let inv2s2 = 1.0 / (2.0 * params.sigma * params.sigma);
    let mut weights = Vec::with_capacity(params.window * params.window);
    for dr in -rad..=rad {
        for dc in -rad..=rad {
            weights.push((dr, dc, libm::exp(-((dr * dr + dc * dc) as f64) * inv2s2)));
        }
    }

    let mut u = Grid::filled(w, h, 0.0);
    let mut v = Grid::filled(w, h, 0.0);
    for r in 0..h {
        for c in 0..w {
            let (mut sxx, mut sxy, mut syy, mut sxt, mut syt) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(dr, dc, wt) in &weights {
                let rr = r as isize + dr;
                let cc = c as isize + dc;
                let gx = *ix.get_clamped(rr, cc);
                let gy = *iy.get_clamped(rr, cc);
                let gt = *it.get_clamped(rr, cc);
                sxx += wt * gx * gx;
                sxy += wt * gx * gy;
                syy += wt * gy * gy;
                sxt += wt * gx * gt;
                syt += wt * gy * gt;
            }
            let a = sxx + params.damping;
            let d = syy + params.damping;
            let det = a * d - sxy * sxy;
            u.set(r, c, (-d * sxt + sxy * syt) / det);
            v.set(r, c, (sxy * sxt - a * syt) / det);
        }
    }
    Ok(VelocityField { u, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_frames_have_no_motion() {
        let img = Grid::from_fn(20, 15, |r, c| ((r * 7 + c * 3) % 200) as u8);
        let f = optical_flow(&img, &img, &FlowParams::default()).unwrap();
        assert!(f.u.data().iter().chain(f.v.data()).all(|&x| x == 0.0));
    }

    #[test]
    fn constant_frames_are_finite_zero() {
        let a = Grid::filled(10, 10, 50u8);
        let b = Grid::filled(10, 10, 90u8);
        let f = optical_flow(&a, &b, &FlowParams::default()).unwrap();
        assert!(f.u.data().iter().chain(f.v.data()).all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_even_window() {
        let a = Grid::filled(10, 10, 50u8);
        let p = FlowParams {
            window: 4,
            ..FlowParams::default()
        };
        assert!(optical_flow(&a, &a, &p).is_err());
        assert!(optical_flow(&a, &Grid::filled(9, 10, 0u8), &FlowParams::default()).is_err());
    }
}
