//! Gaussian mixture clustering by expectation maximization.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::generative::gaussian::{ClassGaussian, CovarianceMode, GaussianClassModel};
use crate::generative::kmeans::plus_plus_seeds;
use crate::linalg::{symmetrize_from_lower, syr_lower};

/// Components whose responsibility mass drops below this are reseeded.
pub const COLLAPSE_MASS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub components: usize,
    pub gamma_cov: f64,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the log-likelihood improves by less than this.
    pub tol: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            components: 2,
            gamma_cov: 1e-6,
            seed: 0,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GaussianClassModel,
    /// Observed-data log-likelihood evaluated before each M-step.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
}

/// Biased sample covariance of all rows.
fn data_covariance(x: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let d = x.cols();
    let n = x.rows() as f64;
    let mut mean = vec![0.0; d];
    for r in x.iter_rows() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    let mut diff = vec![0.0; d];
    for r in x.iter_rows() {
        diff.iter_mut().zip(r).zip(&mean).for_each(|((df, v), m)| *df = v - m);
        syr_lower(&mut cov, d, 1.0 / n, &diff);
    }
    symmetrize_from_lower(&mut cov, d);
    (mean, cov)
}

/// One EM iteration. Returns the updated model and the observed-data
/// log-likelihood of the input model.
///
/// The M-step is `μ_k = Σ γ_ik x_i / γ_k`, `Σ_k = Σ γ_ik x_i x_iᵀ / γ_k − μ_k μ_kᵀ`,
/// `π_k = γ_k / N`; collapsed components are reseeded from `rng`.
pub fn em_step(model: &GaussianClassModel, x: &FeatureMatrix, rng: &mut ChaCha8Rng) -> Result<(GaussianClassModel, f64)> {
    let scorer = model.scorer()?;
    let k = model.num_classes();
    let d = model.dim;
    let n = x.rows();
    let mut resp = vec![0.0; n * k];
    let mut ll = 0.0;
    for (i, row) in x.iter_rows().enumerate() {
        ll += scorer.posterior_into(row, &mut resp[i * k..(i + 1) * k]);
    }
    let mut classes = Vec::with_capacity(k);
    for c in 0..k {
        let mass: f64 = (0..n).map(|i| resp[i * k + c]).sum();
        if mass < COLLAPSE_MASS {
            let pick = rng.random_range(0..n);
            log::warn!("mixture component {c} collapsed (mass {mass:e}), reseeded from sample {pick}");
            let (_, cov) = data_covariance(x);
            classes.push(ClassGaussian {
                mean: x.row(pick).to_vec(),
                cov,
                prior: 1.0 / k as f64,
            });
            continue;
        }
        let mut mean = vec![0.0; d];
        for (i, row) in x.iter_rows().enumerate() {
            let g = resp[i * k + c];
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += g * v);
        }
        mean.iter_mut().for_each(|m| *m /= mass);
        // centered second moment equals Σ γ x xᵀ / γ_k − μ μᵀ
        let mut cov = vec![0.0; d * d];
        let mut diff = vec![0.0; d];
        for (i, row) in x.iter_rows().enumerate() {
            diff.iter_mut().zip(row).zip(&mean).for_each(|((df, v), m)| *df = v - m);
            syr_lower(&mut cov, d, resp[i * k + c] / mass, &diff);
        }
        symmetrize_from_lower(&mut cov, d);
        classes.push(ClassGaussian {
            mean,
            cov,
            prior: mass / n as f64,
        });
    }
    let total: f64 = classes.iter().map(|c| c.prior).sum();
    classes.iter_mut().for_each(|c| c.prior /= total);
    Ok((
        GaussianClassModel {
            dim: d,
            classes,
            gamma_cov: model.gamma_cov,
            mode: model.mode,
        },
        ll,
    ))
}

/// Initial mixture: k-means++ seeded means, the data covariance for every
/// component and uniform priors.
pub fn initial_mixture(x: &FeatureMatrix, params: &GmmParams, rng: &mut ChaCha8Rng) -> GaussianClassModel {
    let rows: Vec<&[f64]> = x.iter_rows().collect();
    let seeds = plus_plus_seeds(&rows, params.components, rng);
    let (_, cov) = data_covariance(x);
    GaussianClassModel {
        dim: x.cols(),
        classes: seeds
            .into_iter()
            .map(|i| ClassGaussian {
                mean: x.row(i).to_vec(),
                cov: cov.clone(),
                prior: 1.0 / params.components as f64,
            })
            .collect(),
        gamma_cov: params.gamma_cov,
        mode: CovarianceMode::Full,
    }
}

pub fn fit_gmm(x: &FeatureMatrix, params: &GmmParams) -> Result<GmmFit> {
    if params.components == 0 || x.rows() < params.components {
        return Err(Error::InvalidParameter(alloc::format!(
            "mixture needs N >= K > 0, got N = {}, K = {}",
            x.rows(),
            params.components
        )));
    }
    if !(params.gamma_cov >= 0.0) {
        return Err(Error::InvalidParameter("gamma_cov must be >= 0".into()));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite feature value".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = initial_mixture(x, params, &mut rng);
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iter {
        let (next, ll) = em_step(&model, x, &mut rng)?;
        iterations += 1;
        let converged = trace.last().is_some_and(|prev| ll - prev < params.tol);
        trace.push(ll);
        model = next;
        if converged {
            break;
        }
    }
    Ok(GmmFit {
        model,
        log_likelihood: trace,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generative::gaussian::class_statistics;

    #[test]
    fn single_component_is_sample_statistics() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![libm::sin(t) * 3.0 + t * 0.1, libm::cos(t * 1.7)]
            })
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let params = GmmParams {
            components: 1,
            gamma_cov: 0.0,
            max_iter: 1,
            ..GmmParams::default()
        };
        let fit = fit_gmm(&x, &params).unwrap();
        let (mean, ucov, n) = class_statistics(&x, 0..30);
        let c = &fit.model.classes[0];
        for j in 0..2 {
            assert!((c.mean[j] - mean[j]).abs() < 1e-12);
        }
        for (a, b) in c.cov.iter().zip(&ucov) {
            // biased divisor
            assert!((a - b * (n - 1) as f64 / n as f64).abs() < 1e-12);
        }
        assert_eq!(c.prior, 1.0);
    }

    #[test]
    fn rejects_too_few_samples() {
        let x = FeatureMatrix::new(1, 1, vec![1.0]).unwrap();
        assert!(fit_gmm(&x, &GmmParams::default()).is_err());
    }
}
