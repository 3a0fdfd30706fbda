use alloc::vec;
use alloc::vec::Vec;

use super::DesignRows;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize_from_lower, syr_lower, Cholesky};

/// Ridge regression: solves `(ΦᵀΦ + γI) w = Φᵀy` by Cholesky factorization.
pub fn rr_fit(phi: &impl DesignRows, y: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if phi.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: phi.rows(),
            actual: y.len(),
        });
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter("gamma must be finite and >= 0".into()));
    }
    let d = phi.dim();
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    phi.for_each_row(|i, r| {
        syr_lower(&mut a, d, 1.0, r);
        b.iter_mut().zip(r).for_each(|(bj, v)| *bj += v * y[i]);
    });
    for j in 0..d {
        a[j * d + j] += gamma;
    }
    symmetrize_from_lower(&mut a, d);
    Ok(Cholesky::new(&a, d)?.solve(&b))
}
