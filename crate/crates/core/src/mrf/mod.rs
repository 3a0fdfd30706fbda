//! Markov random field segmentation on the pixel lattice.
//!
//! Labels are `−1` (clear) and `+1` (cloud); class index 0 holds the clear
//! model. The energy of a pixel taking label `y` is its class log-density
//! (without constants) plus `y · β · Σ_{j∈N(i)} y_j`. The lattice energy
//! counts each neighboring pair once, so a per-pixel argmax is exact
//! coordinate ascent on it. Energies are maximized.

mod anneal;
mod icm;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::generative::gaussian::{fit_gda, CovarianceMode, GaussianClassModel, GaussianScorer};
use crate::grid::Grid;

pub use anneal::{sa_optimize, select_nearest_cumulative, SaResult, SaSchedule};
pub use icm::{icm_fit, IcmFit, IcmParams};

/// Neighborhood system of the pairwise cliques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CliqueOrder {
    /// 4-neighborhood.
    First,
    /// 8-neighborhood.
    Second,
}

const FIRST: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
const SECOND: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

impl CliqueOrder {
    pub fn offsets(&self) -> &'static [(isize, isize)] {
        match self {
            CliqueOrder::First => &FIRST,
            CliqueOrder::Second => &SECOND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrfModel {
    /// Two-class likelihoods: index 0 is clear (`−1`), index 1 is cloud (`+1`).
    pub classes: GaussianClassModel,
    pub beta: f64,
    pub clique_order: CliqueOrder,
}

#[inline]
pub fn class_index(label: i8) -> usize {
    usize::from(label > 0)
}

#[inline]
pub fn label_of(class: usize) -> i8 {
    if class == 1 {
        1
    } else {
        -1
    }
}

/// Sum of in-bounds neighbor labels.
pub fn neighbor_sum(labels: &Grid<i8>, row: usize, col: usize, order: CliqueOrder) -> f64 {
    let (w, h) = labels.shape();
    let mut s = 0i32;
    for &(dr, dc) in order.offsets() {
        let r = row as isize + dr;
        let c = col as isize + dc;
        if r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
            s += i32::from(*labels.get(r as usize, c as usize));
        }
    }
    f64::from(s)
}

/// `y · β · Σ_{j∈N(i)} y_j` for pixel `(row, col)` taking label `candidate`.
pub fn clique_potential(labels: &Grid<i8>, row: usize, col: usize, candidate: i8, beta: f64, order: CliqueOrder) -> f64 {
    f64::from(candidate) * beta * neighbor_sum(labels, row, col, order)
}

/// Class log-density of `x` under the class of `candidate` plus the clique term.
pub fn pixel_energy(x: &[f64], candidate: i8, scorer: &GaussianScorer, psi: f64) -> f64 {
    scorer.energy(x, class_index(candidate)) + psi
}

/// Labels, cached likelihood energies and the lattice energy of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub labels: Grid<i8>,
    /// Per pixel, the likelihood energy of the clear and cloud labels.
    pub unary: Vec<[f64; 2]>,
    pub energy: f64,
}

fn unary_energies(scorer: &GaussianScorer, x: &FeatureMatrix) -> Vec<[f64; 2]> {
    x.iter_rows().map(|r| [scorer.energy(r, 0), scorer.energy(r, 1)]).collect()
}

fn lattice_shape(x: &FeatureMatrix) -> Result<(usize, usize)> {
    x.shape()
        .ok_or_else(|| Error::InvalidParameter("feature matrix has no lattice shape".into()))
}

impl LatticeState {
    /// Likelihood-only argmax labeling.
    pub fn ml_init(model: &MrfModel, x: &FeatureMatrix) -> Result<Self> {
        let (w, h) = lattice_shape(x)?;
        let scorer = model.scorer_for(x)?;
        let unary = unary_energies(&scorer, x);
        let labels = Grid::from_vec(w, h, unary.iter().map(|u| if u[1] > u[0] { 1 } else { -1 }).collect())?;
        Ok(Self::from_parts(model, labels, unary))
    }

    pub fn with_labels(model: &MrfModel, x: &FeatureMatrix, labels: Grid<i8>) -> Result<Self> {
        let (w, h) = lattice_shape(x)?;
        if labels.shape() != (w, h) {
            return Err(Error::ShapeMismatch {
                expected: (w, h),
                actual: labels.shape(),
            });
        }
        if labels.data().iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::InvalidValue("lattice labels must be -1 or +1".into()));
        }
        let scorer = model.scorer_for(x)?;
        let unary = unary_energies(&scorer, x);
        Ok(Self::from_parts(model, labels, unary))
    }

    fn from_parts(model: &MrfModel, labels: Grid<i8>, unary: Vec<[f64; 2]>) -> Self {
        let mut s = Self {
            labels,
            unary,
            energy: 0.0,
        };
        s.energy = s.total_energy(model.beta, model.clique_order);
        s
    }

    /// Σ likelihood energies + β Σ over neighboring pairs (each once) of `y_i y_j`.
    pub fn total_energy(&self, beta: f64, order: CliqueOrder) -> f64 {
        let (w, h) = self.labels.shape();
        let mut unary = 0.0;
        let mut pairs = 0i64;
        for r in 0..h {
            for c in 0..w {
                let y = *self.labels.get(r, c);
                unary += self.unary[r * w + c][class_index(y)];
                for &(dr, dc) in order.offsets() {
                    // forward half of the symmetric neighborhood
                    if (dr, dc) <= (0, 0) {
                        continue;
                    }
                    let rr = r as isize + dr;
                    let cc = c as isize + dc;
                    if rr < h as isize && cc >= 0 && cc < w as isize {
                        pairs += i64::from(y) * i64::from(*self.labels.get(rr as usize, cc as usize));
                    }
                }
            }
        }
        unary + beta * pairs as f64
    }

    /// Energies of the clear and cloud labels at pixel `i` given its neighbors.
    pub fn local_energies(&self, i: usize, beta: f64, order: CliqueOrder) -> [f64; 2] {
        let w = self.labels.width();
        let s = beta * neighbor_sum(&self.labels, i / w, i % w, order);
        [self.unary[i][0] - s, self.unary[i][1] + s]
    }

    /// Labels as a 0/1 mask.
    pub fn mask(&self) -> Grid<u8> {
        self.labels.map(|&l| u8::from(l > 0))
    }

    /// Per-pixel cloud probability: softmax of the two local energies.
    pub fn posterior(&self, beta: f64, order: CliqueOrder) -> Vec<f64> {
        (0..self.unary.len())
            .map(|i| {
                let [e0, e1] = self.local_energies(i, beta, order);
                1.0 / (1.0 + libm::exp(e0 - e1))
            })
            .collect()
    }
}

impl MrfModel {
    pub fn new(classes: GaussianClassModel, beta: f64, clique_order: CliqueOrder) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        if classes.num_classes() != 2 {
            return Err(Error::InvalidParameter("lattice model needs exactly two classes".into()));
        }
        classes.scorer()?;
        Ok(Self {
            classes,
            beta,
            clique_order,
        })
    }

    fn scorer_for(&self, x: &FeatureMatrix) -> Result<GaussianScorer> {
        if x.cols() != self.classes.dim {
            return Err(Error::DimensionMismatch {
                expected: self.classes.dim,
                actual: x.cols(),
            });
        }
        self.classes.scorer()
    }

    /// ML initialization followed by sweeps until no label changes.
    pub fn segment(&self, x: &FeatureMatrix, max_sweeps: usize) -> Result<LatticeState> {
        let mut state = LatticeState::ml_init(self, x)?;
        map_optimize(self, &mut state, max_sweeps);
        Ok(state)
    }
}

/// Supervised fit: per-class sample mean and unbiased covariance over all
/// training pixels, with `β` and the clique order supplied by the caller.
pub fn fit_supervised(x: &FeatureMatrix, y: &[u8], gamma_cov: f64, beta: f64, clique_order: CliqueOrder) -> Result<MrfModel> {
    let classes = fit_gda(x, y, gamma_cov, CovarianceMode::Full)?;
    MrfModel::new(classes, beta, clique_order)
}

/// One raster sweep of per-pixel argmax. Ties keep the current label.
/// Returns the number of changed labels; `state.energy` is recomputed.
pub fn map_sweep(model: &MrfModel, state: &mut LatticeState) -> usize {
    let n = state.unary.len();
    let mut changed = 0;
    let w = state.labels.width();
    for i in 0..n {
        let [e0, e1] = state.local_energies(i, model.beta, model.clique_order);
        let cur = *state.labels.get(i / w, i % w);
        let next = if e1 > e0 {
            1
        } else if e0 > e1 {
            -1
        } else {
            cur
        };
        if next != cur {
            state.labels.set(i / w, i % w, next);
            changed += 1;
        }
    }
    state.energy = state.total_energy(model.beta, model.clique_order);
    changed
}

/// Sweeps until a sweep changes nothing or `max_sweeps` is reached; returns
/// the number of sweeps run.
pub fn map_optimize(model: &MrfModel, state: &mut LatticeState, max_sweeps: usize) -> usize {
    for s in 1..=max_sweeps {
        if map_sweep(model, state) == 0 {
            return s;
        }
    }
    max_sweeps
}
