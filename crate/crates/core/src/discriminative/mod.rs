//! Linear classifiers solved in the primal over explicitly expanded features.

mod gp;
mod rr;
mod svc;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::poly::{PolyExpansion, DEFAULT_DIM_CAP};
use crate::features::FeatureMatrix;
use crate::linalg::dot;

pub use gp::{gp_fit, gp_gradient, gp_log_posterior, probit_probability, GpFit};
pub use rr::rr_fit;
pub use svc::{svc_fit, svc_gradient, svc_objective};

/// Row-wise access to a design matrix, materialized or computed on the fly.
pub trait DesignRows {
    fn rows(&self) -> usize;
    fn dim(&self) -> usize;
    fn for_each_row<F: FnMut(usize, &[f64])>(&self, f: F);
}

impl DesignRows for FeatureMatrix {
    fn rows(&self) -> usize {
        FeatureMatrix::rows(self)
    }

    fn dim(&self) -> usize {
        self.cols()
    }

    fn for_each_row<F: FnMut(usize, &[f64])>(&self, mut f: F) {
        for (i, r) in self.iter_rows().enumerate() {
            f(i, r);
        }
    }
}

/// Polynomial expansion of standardized rows, produced one row at a time.
pub struct ExpandedRows<'a> {
    x: &'a FeatureMatrix,
    scaler: &'a Standardizer,
    expansion: &'a PolyExpansion,
}

impl DesignRows for ExpandedRows<'_> {
    fn rows(&self) -> usize {
        self.x.rows()
    }

    fn dim(&self) -> usize {
        self.expansion.output_dim()
    }

    fn for_each_row<F: FnMut(usize, &[f64])>(&self, mut f: F) {
        let mut z = vec![0.0; self.x.cols()];
        let mut phi = Vec::with_capacity(self.dim());
        for (i, r) in self.x.iter_rows().enumerate() {
            self.scaler.apply_into(r, &mut z);
            phi.clear();
            // dimensions were checked when the view was built
            let _ = self.expansion.expand_into(&z, &mut phi);
            f(i, &phi);
        }
    }
}

/// Per-column z-scoring; constant columns are only centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn fit(x: &FeatureMatrix) -> Self {
        let d = x.cols();
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in x.iter_rows() {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in x.iter_rows() {
            var.iter_mut().zip(r).zip(&mean).for_each(|((s, v), m)| *s += (v - m) * (v - m));
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Rr,
    Svc,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// `γ` for ridge regression, `C` for the SVC, prior variance `γ` for the GP.
    pub hyperparameter: f64,
    pub expansion_order: u32,
    pub expansion_bias: f64,
    pub standardize: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            hyperparameter: 1.0,
            expansion_order: 1,
            expansion_bias: 1.0,
            standardize: true,
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub hyperparameter: f64,
    pub weights: Vec<f64>,
    /// Laplace posterior covariance (GP only), row-major.
    pub posterior_cov: Option<Vec<f64>>,
    pub scaler: Standardizer,
    pub expansion_order: u32,
    pub expansion_bias: f64,
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + libm::exp(-a))
    } else {
        let e = libm::exp(a);
        e / (1.0 + e)
    }
}

fn check_targets(x: &FeatureMatrix, y: &[u8]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if let Some(v) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidValue(alloc::format!("label {v} is not 0 or 1")));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite feature value".into()));
    }
    Ok(())
}

impl LinearModel {
    /// Standardizes `x`, expands it and fits the requested solver. Labels are
    /// 0/1; the SVC maps them to ∓1 internally.
    pub fn fit(kind: LinearKind, x: &FeatureMatrix, y: &[u8], params: &LinearParams) -> Result<Self> {
        check_targets(x, y)?;
        let scaler = if params.standardize {
            Standardizer::fit(x)
        } else {
            Standardizer::identity(x.cols())
        };
        let expansion = PolyExpansion::new(x.cols(), params.expansion_order, params.expansion_bias, DEFAULT_DIM_CAP)?;
        let rows = ExpandedRows {
            x,
            scaler: &scaler,
            expansion: &expansion,
        };
        let h = params.hyperparameter;
        let (weights, posterior_cov) = match kind {
            LinearKind::Rr => {
                let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
                (rr_fit(&rows, &t, h)?, None)
            }
            LinearKind::Svc => {
                let t: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
                (svc_fit(&rows, &t, h, params.max_iter, params.tol)?, None)
            }
            LinearKind::Gp => {
                let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
                let fit = gp_fit(&rows, &t, h, params.max_iter, params.tol)?;
                (fit.weights, Some(fit.posterior_cov))
            }
        };
        Ok(Self {
            kind,
            hyperparameter: h,
            weights,
            posterior_cov,
            scaler,
            expansion_order: params.expansion_order,
            expansion_bias: params.expansion_bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.mean.len()
    }

    pub fn expansion(&self) -> Result<PolyExpansion> {
        PolyExpansion::new(self.input_dim(), self.expansion_order, self.expansion_bias, DEFAULT_DIM_CAP)
    }

    /// Class-1 probability per row: a sigmoid of the margin for ridge and
    /// SVC, the probit-moderated sigmoid for the GP.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let expansion = self.expansion()?;
        if expansion.output_dim() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: expansion.output_dim(),
            });
        }
        let rows = ExpandedRows {
            x,
            scaler: &self.scaler,
            expansion: &expansion,
        };
        let mut out = vec![0.0; x.rows()];
        match (&self.posterior_cov, self.kind) {
            (Some(cov), LinearKind::Gp) => {
                let d = self.weights.len();
                let mut tmp = vec![0.0; d];
                rows.for_each_row(|i, phi| {
                    for (a, t) in tmp.iter_mut().enumerate() {
                        *t = dot(&cov[a * d..(a + 1) * d], phi);
                    }
                    out[i] = probit_probability(dot(&self.weights, phi), dot(phi, &tmp));
                });
            }
            (None, LinearKind::Gp) => return Err(Error::MissingField("posterior_cov")),
            _ => rows.for_each_row(|i, phi| out[i] = sigmoid(dot(&self.weights, phi))),
        }
        Ok(out)
    }
}

/// `σ(wᵀφ)` per row of an already expanded design matrix.
pub fn predict_sigmoid(weights: &[f64], phi: &FeatureMatrix) -> Result<Vec<f64>> {
    if phi.cols() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            actual: phi.cols(),
        });
    }
    Ok(phi.iter_rows().map(|r| sigmoid(dot(weights, r))).collect())
}
