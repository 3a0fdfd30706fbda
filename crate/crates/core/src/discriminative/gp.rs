//! Bayesian logistic regression with a Laplace approximation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{sigmoid, DesignRows};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, symmetrize_from_lower, syr_lower, Cholesky};

#[derive(Debug, Clone, PartialEq)]
pub struct GpFit {
    /// Posterior mode.
    pub weights: Vec<f64>,
    /// Inverse Hessian of the negative log posterior at the mode.
    pub posterior_cov: Vec<f64>,
    pub iterations: usize,
    /// Log posterior after each accepted step, starting at `w = 0`.
    pub log_posterior: Vec<f64>,
}

/// `log σ(a)` without overflow.
#[inline]
fn log_sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        -libm::log1p(libm::exp(-a))
    } else {
        a - libm::log1p(libm::exp(a))
    }
}

/// `Σ [yᵢ log σ(aᵢ) + (1 − yᵢ) log σ(−aᵢ)] − ‖w‖² / (2γ)` with `aᵢ = wᵀφᵢ`,
/// the log posterior under the prior `N(0, γI)` up to a constant.
pub fn gp_log_posterior(phi: &impl DesignRows, y: &[f64], w: &[f64], gamma: f64) -> f64 {
    let mut ll = 0.0;
    phi.for_each_row(|i, r| {
        let a = dot(w, r);
        ll += y[i] * log_sigmoid(a) + (1.0 - y[i]) * log_sigmoid(-a);
    });
    ll - 0.5 * dot(w, w) / gamma
}

/// `Φᵀ(y − σ(Φw)) − w / γ`.
pub fn gp_gradient(phi: &impl DesignRows, y: &[f64], w: &[f64], gamma: f64) -> Vec<f64> {
    let mut g: Vec<f64> = w.iter().map(|v| -v / gamma).collect();
    phi.for_each_row(|i, r| {
        let e = y[i] - sigmoid(dot(w, r));
        g.iter_mut().zip(r).for_each(|(gj, v)| *gj += e * v);
    });
    g
}

/// `ΦᵀRΦ + I/γ` with `R = diag(ŷ(1 − ŷ))`.
fn neg_hessian(phi: &impl DesignRows, w: &[f64], gamma: f64) -> Vec<f64> {
    let d = w.len();
    let mut h = vec![0.0; d * d];
    phi.for_each_row(|_, r| {
        let p = sigmoid(dot(w, r));
        syr_lower(&mut h, d, p * (1.0 - p), r);
    });
    for j in 0..d {
        h[j * d + j] += 1.0 / gamma;
    }
    symmetrize_from_lower(&mut h, d);
    h
}

/// Newton ascent on the log posterior with step halving. Stops when half the
/// Newton decrement `gᵀH⁻¹g / 2` falls below `tol`.
pub fn gp_fit(phi: &impl DesignRows, y: &[f64], gamma: f64, max_iter: usize, tol: f64) -> Result<GpFit> {
    if phi.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.rows(),
            actual: y.len(),
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter("prior variance must be finite and > 0".into()));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidValue("GP labels must be 0 or 1".into()));
    }
    let d = phi.dim();
    let mut w = vec![0.0; d];
    let mut lp = gp_log_posterior(phi, y, &w, gamma);
    let mut trace = vec![lp];
    for it in 0..=max_iter {
        let g = gp_gradient(phi, y, &w, gamma);
        let chol = Cholesky::new(&neg_hessian(phi, &w, gamma), d)?;
        let step = chol.solve(&g);
        if 0.5 * dot(&g, &step) <= tol {
            return Ok(GpFit {
                weights: w,
                posterior_cov: chol.inverse(),
                iterations: it,
                log_posterior: trace,
            });
        }
        if it == max_iter {
            return Err(Error::NotConverged {
                iterations: max_iter,
                gradient_norm: norm(&g),
            });
        }
        let mut t = 1.0;
        loop {
            let next: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let next_lp = gp_log_posterior(phi, y, &next, gamma);
            if next_lp >= lp {
                w = next;
                lp = next_lp;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NotConverged {
                    iterations: it,
                    gradient_norm: norm(&g),
                });
            }
        }
        trace.push(lp);
    }
    unreachable!("loop returns on its last iteration")
}

/// `σ(κ μ)` with `κ = (1 + π σ² / 8)^(−1/2)`.
pub fn probit_probability(mean: f64, variance: f64) -> f64 {
    sigmoid(mean / libm::sqrt(1.0 + PI * variance.max(0.0) / 8.0))
}
