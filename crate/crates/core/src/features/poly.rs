//! Explicit polynomial feature map whose inner product reproduces the
//! inhomogeneous polynomial kernel `(a₀ + xᵀx′)ⁿ`.
//!
//! A monomial `x^α` with `|α| ≤ n` is scaled by
//! `sqrt(n! / ((n − |α|)! ∏ αⱼ!) · a₀^(n − |α|))`, so summing products of the
//! map over all monomials is the multinomial expansion of the kernel.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::assemble::FeatureMatrix;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Binomial coefficient `C(n, k)`, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Dimension of the expansion of a `d`-vector to order `n`: `C(d + n, n)`.
pub fn expanded_dim(d: usize, n: u32) -> Option<usize> {
    binomial(d.checked_add(n as usize)?, n as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyExpansion {
    input_dim: usize,
    order: u32,
    bias: f64,
    /// Variable indices per monomial (nondecreasing), graded by degree.
    monomials: Vec<Vec<u16>>,
    coefs: Vec<f64>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl PolyExpansion {
    pub fn new(input_dim: usize, order: u32, bias: f64, dim_cap: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidParameter("expansion order must be >= 1".into()));
        }
        if !(bias > 0.0) {
            return Err(Error::InvalidParameter("expansion bias must be > 0".into()));
        }
        let dim = expanded_dim(input_dim, order).ok_or(Error::ExpansionTooLarge {
            dim: usize::MAX,
            cap: dim_cap,
        })?;
        if dim > dim_cap {
            return Err(Error::ExpansionTooLarge { dim, cap: dim_cap });
        }
        let mut monomials: Vec<Vec<u16>> = Vec::with_capacity(dim);
        monomials.push(Vec::new());
        let mut prev_start = 0;
        for _deg in 1..=order {
            let prev_end = monomials.len();
            for m in prev_start..prev_end {
                let last = monomials[m].last().map_or(0, |&v| v as usize);
                for var in last..input_dim {
                    let mut next = monomials[m].clone();
                    next.push(var as u16);
                    monomials.push(next);
                }
            }
            prev_start = prev_end;
        }
        debug_assert_eq!(monomials.len(), dim);
        let nfact = factorial(order);
        let coefs = monomials
            .iter()
            .map(|m| {
                let deg = m.len() as u32;
                let mut denom = factorial(order - deg);
                let mut run = 1u32;
                for w in m.windows(2) {
                    if w[0] == w[1] {
                        run += 1;
                    } else {
                        denom *= factorial(run);
                        run = 1;
                    }
                }
                if !m.is_empty() {
                    denom *= factorial(run);
                }
                libm::sqrt(nfact / denom * libm::pow(bias, (order - deg) as f64))
            })
            .collect();
        Ok(Self {
            input_dim,
            order,
            bias,
            monomials,
            coefs,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn expand_into(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        for (m, c) in self.monomials.iter().zip(&self.coefs) {
            let p: f64 = m.iter().map(|&j| x[j as usize]).product();
            out.push(c * p);
        }
        Ok(())
    }

    pub fn expand(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.output_dim());
        self.expand_into(x, &mut out)?;
        Ok(out)
    }

    pub fn expand_matrix(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut data = Vec::with_capacity(m.rows() * self.output_dim());
        for row in m.iter_rows() {
            self.expand_into(row, &mut data)?;
        }
        FeatureMatrix::new(m.rows(), self.output_dim(), data)
    }
}

/// One-shot expansion of a single row.
pub fn poly_expand(row: &[f64], order: u32, bias: f64) -> Result<Vec<f64>> {
    PolyExpansion::new(row.len(), order, bias, DEFAULT_DIM_CAP)?.expand(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    #[test]
    fn linear_case() {
        assert_eq!(poly_expand(&[3.0, -2.0], 1, 1.0).unwrap(), [1.0, 3.0, -2.0]);
    }

    #[test]
    fn quadratic_dimension_and_identity() {
        let x = [0.3, -1.2];
        let y = [2.0, 0.7];
        let px = poly_expand(&x, 2, 1.0).unwrap();
        let py = poly_expand(&y, 2, 1.0).unwrap();
        assert_eq!(px.len(), 6);
        let k = libm::pow(1.0 + dot(&x, &y), 2.0);
        assert!((dot(&px, &py) - k).abs() < 1e-9);
    }

    #[test]
    fn zero_vector_gives_bias_power() {
        let z = poly_expand(&[0.0; 3], 3, 2.5).unwrap();
        let y = poly_expand(&[1.0, -4.0, 0.5], 3, 2.5).unwrap();
        assert!((dot(&z, &y) - libm::pow(2.5, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(
            PolyExpansion::new(27, 3, 1.0, 1000),
            Err(Error::ExpansionTooLarge { dim: 4060, cap: 1000 })
        ));
        assert_eq!(expanded_dim(2, 2), Some(6));
        assert_eq!(expanded_dim(27, 2), Some(406));
    }
}
