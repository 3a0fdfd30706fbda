//! Unsupervised parameter learning by iterated conditional modes.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_index, map_sweep, CliqueOrder, LatticeState, MrfModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::generative::gaussian::{class_statistics, ClassGaussian, CovarianceMode, GaussianClassModel};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcmParams {
    pub gamma_cov: f64,
    pub beta: f64,
    pub clique_order: CliqueOrder,
    pub seed: u64,
    pub max_iter: usize,
    /// Feature column whose larger class mean marks the cloud class.
    pub orient_column: Option<usize>,
}

impl Default for IcmParams {
    fn default() -> Self {
        Self {
            gamma_cov: 1.0,
            beta: 1.0,
            clique_order: CliqueOrder::First,
            seed: 0,
            max_iter: 50,
            orient_column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcmFit {
    pub model: MrfModel,
    /// Total energy of every accepted iteration; non-decreasing.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    /// Labels of each training image under the returned model.
    pub labels: Vec<Grid<i8>>,
}

const MAX_REDRAWS: usize = 16;

fn class_models(x: &FeatureMatrix, labels: &[Grid<i8>], gamma_cov: f64) -> Option<GaussianClassModel> {
    let flat: Vec<i8> = labels.iter().flat_map(|l| l.data().iter().copied()).collect();
    let mut classes = Vec::with_capacity(2);
    for k in 0..2 {
        let (mean, cov, n) = class_statistics(x, (0..flat.len()).filter(|&i| class_index(flat[i]) == k));
        if n < 2 {
            return None;
        }
        classes.push(ClassGaussian { mean, cov, prior: 0.5 });
    }
    Some(GaussianClassModel {
        dim: x.cols(),
        classes,
        gamma_cov,
        mode: CovarianceMode::Full,
    })
}

/// Counts pixels per class over all images.
fn class_counts(labels: &[Grid<i8>]) -> [usize; 2] {
    let mut c = [0; 2];
    for l in labels {
        for &v in l.data() {
            c[class_index(v)] += 1;
        }
    }
    c
}

/// Assigns a random square block of one image to the starved class.
fn reseed_block(labels: &mut [Grid<i8>], class: i8, rng: &mut ChaCha8Rng) {
    let img = rng.random_range(0..labels.len());
    let (w, h) = labels[img].shape();
    let side = (w.min(h) / 4).max(2).min(w.min(h));
    let r0 = rng.random_range(0..=h - side);
    let c0 = rng.random_range(0..=w - side);
    log::warn!("class {class} collapsed; relabeling a {side}x{side} block of image {img} at ({r0}, {c0})");
    for r in r0..r0 + side {
        for c in c0..c0 + side {
            labels[img].set(r, c, class);
        }
    }
}

/// Learns two class models from unlabeled lattices. Each iteration refits
/// per-class mean and unbiased covariance on the current labels, then runs
/// one in-place raster sweep. Iteration stops once the total energy fails to
/// increase; the parameters of the last increasing iteration are returned.
pub fn icm_fit(images: &[&FeatureMatrix], params: &IcmParams) -> Result<IcmFit> {
    if images.is_empty() {
        return Err(Error::Empty("training images"));
    }
    if !(params.gamma_cov >= 0.0) {
        return Err(Error::InvalidParameter("gamma_cov must be >= 0".into()));
    }
    let mut shapes = Vec::with_capacity(images.len());
    for x in images {
        shapes.push(
            x.shape()
                .ok_or_else(|| Error::InvalidParameter("feature matrix has no lattice shape".into()))?,
        );
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("non-finite feature value".into()));
        }
    }
    let stacked = FeatureMatrix::vstack(images)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut labels: Vec<Grid<i8>> = Vec::new();
    for attempt in 0..=MAX_REDRAWS {
        labels = shapes
            .iter()
            .map(|&(w, h)| Grid::from_fn(w, h, |_, _| if rng.random_range(0..2) == 1 { 1 } else { -1 }))
            .collect();
        if class_counts(&labels).iter().all(|&n| n >= 2) {
            break;
        }
        if attempt == MAX_REDRAWS {
            let c = class_counts(&labels);
            let class = usize::from(c[1] < c[0]);
            return Err(Error::InsufficientSamples {
                class,
                count: c[class],
                required: 2,
            });
        }
    }

    let mut best: Option<(MrfModel, Vec<Grid<i8>>)> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let mut classes = None;
        for _ in 0..=MAX_REDRAWS {
            classes = class_models(&stacked, &labels, params.gamma_cov);
            if classes.is_some() {
                break;
            }
            let c = class_counts(&labels);
            reseed_block(&mut labels, if c[0] < c[1] { -1 } else { 1 }, &mut rng);
        }
        let classes = classes.ok_or(Error::InsufficientSamples {
            class: 0,
            count: 0,
            required: 2,
        })?;
        let model = MrfModel::new(classes, params.beta, params.clique_order)?;
        let mut energy = 0.0;
        let mut next = Vec::with_capacity(labels.len());
        for (x, l) in images.iter().zip(&labels) {
            let mut state = LatticeState::with_labels(&model, x, l.clone())?;
            map_sweep(&model, &mut state);
            energy += state.energy;
            next.push(state.labels);
        }
        if let Some(prev) = trace.last() {
            if energy <= *prev {
                break;
            }
        }
        trace.push(energy);
        best = Some((model, next.clone()));
        labels = next;
    }
    let (mut model, mut labels) = best.ok_or(Error::InvalidParameter("max_iter must be > 0".into()))?;
    if let Some(col) = params.orient_column {
        if col >= model.classes.dim {
            return Err(Error::InvalidParameter(alloc::format!("orient column {col} out of range")));
        }
        if model.classes.classes[0].mean[col] > model.classes.classes[1].mean[col] {
            model.classes.classes.swap(0, 1);
            for l in &mut labels {
                l.data_mut().iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    Ok(IcmFit {
        model,
        energy_trace: trace,
        iterations,
        labels,
    })
}
