//! Per-class Gaussian likelihood models shared by discriminant analysis,
//! naive Bayes, mixtures and Markov random fields.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{symmetrize_from_lower, syr_lower, Cholesky};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceMode {
    Full,
    /// Features independent given the class; off-diagonal entries are ignored.
    Diagonal,
}

/// Mean, covariance (row-major `d × d`, before regularization) and prior of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassModel {
    pub dim: usize,
    pub classes: Vec<ClassGaussian>,
    /// Added to every covariance diagonal before use.
    pub gamma_cov: f64,
    pub mode: CovarianceMode,
}

impl GaussianClassModel {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Covariance of class `k` including the `gamma_cov · I` regularization.
    pub fn effective_cov(&self, k: usize) -> Vec<f64> {
        let d = self.dim;
        let mut c = self.classes[k].cov.clone();
        for i in 0..d {
            c[i * d + i] += self.gamma_cov;
        }
        if self.mode == CovarianceMode::Diagonal {
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        c[i * d + j] = 0.0;
                    }
                }
            }
        }
        c
    }

    pub fn scorer(&self) -> Result<GaussianScorer> {
        let d = self.dim;
        let mut factors = Vec::with_capacity(self.classes.len());
        for k in 0..self.classes.len() {
            let cov = self.effective_cov(k);
            let mean = self.classes[k].mean.clone();
            let factor = match self.mode {
                CovarianceMode::Full => {
                    let chol = Cholesky::new(&cov, d)?;
                    let log_det = chol.log_det();
                    ClassFactor::Full { mean, chol, log_det }
                }
                CovarianceMode::Diagonal => {
                    let var: Vec<f64> = (0..d).map(|i| cov[i * d + i]).collect();
                    if var.iter().any(|v| !(*v > 0.0)) {
                        return Err(Error::NotPositiveDefinite);
                    }
                    ClassFactor::Diagonal { mean, var }
                }
            };
            factors.push(factor);
        }
        let log_priors = self.classes.iter().map(|c| libm::log(c.prior)).collect();
        Ok(GaussianScorer {
            dim: d,
            factors,
            log_priors,
        })
    }

    /// Swaps classes so that class 1 has the larger mean in `column`.
    pub fn oriented(mut self, column: usize) -> Self {
        if self.classes.len() == 2 && self.classes[0].mean[column] > self.classes[1].mean[column] {
            self.classes.swap(0, 1);
        }
        self
    }
}

#[derive(Debug, Clone)]
enum ClassFactor {
    Full { mean: Vec<f64>, chol: Cholesky, log_det: f64 },
    Diagonal { mean: Vec<f64>, var: Vec<f64> },
}

/// Prepared factorizations for fast likelihood evaluation.
#[derive(Debug, Clone)]
pub struct GaussianScorer {
    dim: usize,
    factors: Vec<ClassFactor>,
    log_priors: Vec<f64>,
}

impl GaussianScorer {
    pub fn num_classes(&self) -> usize {
        self.factors.len()
    }

    /// `−½ log|Σ_k| − ½ (x − μ_k)ᵀ Σ_k⁻¹ (x − μ_k)`: the class log-density
    /// without the `−d/2 log 2π` constant.
    pub fn energy(&self, x: &[f64], k: usize) -> f64 {
        match &self.factors[k] {
            ClassFactor::Full { mean, chol, log_det } => {
                let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
                -0.5 * log_det - 0.5 * chol.inv_quad(&diff)
            }
            // product of univariate normals
            ClassFactor::Diagonal { mean, var } => x
                .iter()
                .zip(mean)
                .zip(var)
                .map(|((xi, mi), vi)| {
                    let z = xi - mi;
                    -0.5 * libm::log(*vi) - 0.5 * z * z / vi
                })
                .sum(),
        }
    }

    pub fn log_likelihood(&self, x: &[f64], k: usize) -> f64 {
        self.energy(x, k) - 0.5 * self.dim as f64 * libm::log(2.0 * PI)
    }

    /// Class posteriors of one sample, written to `out`; returns the log of
    /// the mixture density `log Σ_k π_k p(x | k)`.
    pub fn posterior_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.log_priors[k] + self.log_likelihood(x, k);
        }
        log_softmax_in_place(out)
    }

    fn check_dim(&self, x: &FeatureMatrix) -> Result<()> {
        if x.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.cols(),
            });
        }
        Ok(())
    }

    /// Row-major `N × K` class posteriors.
    pub fn posterior(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let k = self.num_classes();
        let mut out = vec![0.0; x.rows() * k];
        for (i, row) in x.iter_rows().enumerate() {
            self.posterior_into(row, &mut out[i * k..(i + 1) * k]);
        }
        Ok(out)
    }

    /// Observed-data log-likelihood `Σ_i log Σ_k π_k p(x_i | k)`.
    pub fn total_log_likelihood(&self, x: &FeatureMatrix) -> Result<f64> {
        self.check_dim(x)?;
        let mut buf = vec![0.0; self.num_classes()];
        Ok(x.iter_rows().map(|r| self.posterior_into(r, &mut buf)).sum())
    }
}

/// Replaces log-weights by normalized probabilities; returns the log-sum-exp.
pub fn log_softmax_in_place(v: &mut [f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let n = v.len() as f64;
        v.iter_mut().for_each(|p| *p = 1.0 / n);
        return max;
    }
    let mut sum = 0.0;
    for p in v.iter_mut() {
        *p = libm::exp(*p - max);
        sum += *p;
    }
    v.iter_mut().for_each(|p| *p /= sum);
    max + libm::log(sum)
}

/// Class-1 column of the posterior for a two-class model.
pub fn class1_posterior(model: &GaussianClassModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    let k = model.num_classes();
    let post = model.scorer()?.posterior(x)?;
    Ok(post.chunks_exact(k).map(|p| p[1]).collect())
}

/// Row-major `N × K` class posteriors.
pub fn posterior(model: &GaussianClassModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    model.scorer()?.posterior(x)
}

fn check_finite(x: &FeatureMatrix) -> Result<()> {
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite feature value".into()));
    }
    Ok(())
}

/// Sample mean and unbiased covariance of the rows selected by `members`.
pub(crate) fn class_statistics(x: &FeatureMatrix, members: impl Iterator<Item = usize> + Clone) -> (Vec<f64>, Vec<f64>, usize) {
    let d = x.cols();
    let mut mean = vec![0.0; d];
    let mut n = 0usize;
    for i in members.clone() {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
        n += 1;
    }
    if n == 0 {
        return (mean, vec![0.0; d * d], 0);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; d * d];
    let mut diff = vec![0.0; d];
    for i in members {
        for ((df, v), m) in diff.iter_mut().zip(x.row(i)).zip(&mean) {
            *df = v - m;
        }
        syr_lower(&mut cov, d, 1.0, &diff);
    }
    symmetrize_from_lower(&mut cov, d);
    if n > 1 {
        cov.iter_mut().for_each(|c| *c /= (n - 1) as f64);
    }
    (mean, cov, n)
}

fn check_labels(x: &FeatureMatrix, y: &[u8]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if x.cols() == 0 {
        return Err(Error::Empty("feature columns"));
    }
    if let Some(v) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidValue(alloc::format!("label {v} is not 0 or 1")));
    }
    Ok(())
}

fn supervised_classes(x: &FeatureMatrix, y: &[u8]) -> Result<Vec<ClassGaussian>> {
    check_labels(x, y)?;
    check_finite(x)?;
    let mut classes = Vec::with_capacity(2);
    for k in 0..2u8 {
        let (mean, cov, n) = class_statistics(x, (0..y.len()).filter(|&i| y[i] == k));
        if n < 2 {
            return Err(Error::InsufficientSamples {
                class: k as usize,
                count: n,
                required: 2,
            });
        }
        classes.push(ClassGaussian { mean, cov, prior: 0.5 });
    }
    Ok(classes)
}

/// Gaussian discriminant analysis: per-class sample mean and unbiased
/// covariance with uniform priors.
pub fn fit_gda(x: &FeatureMatrix, y: &[u8], gamma_cov: f64, mode: CovarianceMode) -> Result<GaussianClassModel> {
    if !(gamma_cov >= 0.0) {
        return Err(Error::InvalidParameter("gamma_cov must be >= 0".into()));
    }
    let model = GaussianClassModel {
        dim: x.cols(),
        classes: supervised_classes(x, y)?,
        gamma_cov,
        mode,
    };
    model.scorer()?;
    Ok(model)
}

/// Relative floor on naive Bayes variances.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Naive Bayes: independent univariate normals per feature and class. Each
/// variance is floored at `VARIANCE_FLOOR` times the feature's overall variance.
pub fn fit_nbc(x: &FeatureMatrix, y: &[u8]) -> Result<GaussianClassModel> {
    let mut model = GaussianClassModel {
        dim: x.cols(),
        classes: supervised_classes(x, y)?,
        gamma_cov: 0.0,
        mode: CovarianceMode::Diagonal,
    };
    let d = x.cols();
    let (_, overall, _) = class_statistics(x, 0..x.rows());
    for j in 0..d {
        let floor = if overall[j * d + j] > 0.0 {
            VARIANCE_FLOOR * overall[j * d + j]
        } else {
            VARIANCE_FLOOR
        };
        for c in &mut model.classes {
            let v = &mut c.cov[j * d + j];
            if *v < floor {
                *v = floor;
            }
        }
    }
    Ok(model)
}
