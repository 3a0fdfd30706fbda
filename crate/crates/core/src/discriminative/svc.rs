use alloc::vec;
use alloc::vec::Vec;

use super::DesignRows;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, symmetrize_from_lower, syr_lower, Cholesky};

/// `½‖w‖² + C Σ max(0, 1 − yᵢ wᵀφᵢ)²` with labels `yᵢ ∈ {−1, +1}`.
pub fn svc_objective(phi: &impl DesignRows, y: &[f64], w: &[f64], c: f64) -> f64 {
    let mut loss = 0.0;
    phi.for_each_row(|i, r| {
        let slack = 1.0 - y[i] * dot(w, r);
        if slack > 0.0 {
            loss += slack * slack;
        }
    });
    0.5 * dot(w, w) + c * loss
}

/// Gradient `w − 2C Σ_{active} yᵢ (1 − yᵢ wᵀφᵢ) φᵢ`.
pub fn svc_gradient(phi: &impl DesignRows, y: &[f64], w: &[f64], c: f64) -> Vec<f64> {
    let mut g = w.to_vec();
    phi.for_each_row(|i, r| {
        let slack = 1.0 - y[i] * dot(w, r);
        if slack > 0.0 {
            let s = -2.0 * c * y[i] * slack;
            g.iter_mut().zip(r).for_each(|(gj, v)| *gj += s * v);
        }
    });
    g
}

fn active_set(phi: &impl DesignRows, y: &[f64], w: &[f64]) -> Vec<bool> {
    let mut a = vec![false; phi.rows()];
    phi.for_each_row(|i, r| a[i] = y[i] * dot(w, r) < 1.0);
    a
}

/// Squared-hinge SVC by Newton's method on the active set with Armijo
/// backtracking. On a fixed active set the objective is quadratic, so a full
/// step that leaves the active set unchanged lands on the exact minimizer.
pub fn svc_fit(phi: &impl DesignRows, y: &[f64], c: f64, max_iter: usize, tol: f64) -> Result<Vec<f64>> {
    if phi.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.rows(),
            actual: y.len(),
        });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter("C must be finite and >= 0".into()));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidValue("SVC labels must be -1 or +1".into()));
    }
    if c > 0.0 && !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::InsufficientSamples {
            class: usize::from(!y.contains(&1.0)),
            count: 0,
            required: 1,
        });
    }
    let d = phi.dim();
    let mut w = vec![0.0; d];
    let mut prev_active: Option<Vec<bool>> = None;
    let mut full_step = false;
    let mut gnorm = f64::INFINITY;
    for _ in 0..max_iter {
        let active = active_set(phi, y, &w);
        if full_step && prev_active.as_ref() == Some(&active) {
            return Ok(w);
        }
        let g = svc_gradient(phi, y, &w, c);
        gnorm = norm(&g);
        if gnorm < tol {
            return Ok(w);
        }
        let mut h = vec![0.0; d * d];
        phi.for_each_row(|i, r| {
            if active[i] {
                syr_lower(&mut h, d, 2.0 * c, r);
            }
        });
        for j in 0..d {
            h[j * d + j] += 1.0;
        }
        symmetrize_from_lower(&mut h, d);
        let step: Vec<f64> = Cholesky::new(&h, d)?.solve(&g).iter().map(|v| -v).collect();
        let f0 = svc_objective(phi, y, &w, c);
        let slope = dot(&g, &step);
        let mut t = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = w.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if svc_objective(phi, y, &next, c) <= f0 + 1e-4 * t * slope {
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // no further decrease is representable
                return Ok(w);
            }
        }
        full_step = t == 1.0;
        prev_active = Some(active);
        w = next;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        gradient_norm: gnorm,
    })
}
