//! Soft voting over the cloud posteriors of several models.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{tune_lambda, TunedThreshold};

/// Largest candidate pool accepted by [`select_subset`].
pub const MAX_CANDIDATES: usize = 10;

fn check_maps(maps: &[&[f64]]) -> Result<usize> {
    let first = maps.first().ok_or(Error::Empty("posterior maps"))?;
    let n = first.len();
    for m in maps {
        if m.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: m.len(),
            });
        }
        if m.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidValue("posteriors must lie in [0, 1]".into()));
        }
    }
    Ok(n)
}

/// Pixelwise mean of the member posteriors. Values are summed in sorted
/// order, so member order does not affect the result.
pub fn vote(maps: &[&[f64]]) -> Result<Vec<f64>> {
    let n = check_maps(maps)?;
    let k = maps.len();
    let mut buf = vec![0.0; k];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        for (b, m) in buf.iter_mut().zip(maps) {
            *b = m[i];
        }
        buf.sort_by(f64::total_cmp);
        let mean = buf.iter().sum::<f64>() / k as f64;
        out.push(mean.clamp(buf[0], buf[k - 1]));
    }
    Ok(out)
}

/// Fraction of members whose hard label is cloud; a strict majority is
/// any value above ½.
pub fn majority_vote(masks: &[&[u8]]) -> Result<Vec<f64>> {
    let first = masks.first().ok_or(Error::Empty("label masks"))?;
    let n = first.len();
    if let Some(m) = masks.iter().find(|m| m.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.len(),
        });
    }
    Ok((0..n)
        .map(|i| masks.iter().filter(|m| m[i] != 0).count() as f64 / masks.len() as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    /// Indices into the candidate list.
    pub members: Vec<usize>,
    pub lambda: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSelection {
    pub ensemble: VotingEnsemble,
    pub tuned: TunedThreshold,
    /// Every evaluated subset with its validation J, in evaluation order.
    pub evaluated: Vec<(Vec<usize>, f64)>,
}

/// Subsets of `0..n` with at least two members, by size then lexicographically.
pub fn candidate_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 2..=n {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            // advance to the next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Exhaustive search over member subsets of size ≥ 2. Each subset's vote
/// is λ-tuned on the validation labels; the highest J wins, ties going to
/// the smaller subset and then to the earlier one.
pub fn select_subset(candidates: &[&[f64]], y_val: &[u8], grid: &[f64]) -> Result<SubsetSelection> {
    if candidates.len() > MAX_CANDIDATES {
        return Err(Error::TooManyCandidates(candidates.len()));
    }
    if candidates.len() < 2 {
        return Err(Error::InvalidParameter("subset selection needs at least two candidates".into()));
    }
    check_maps(candidates)?;
    let mut evaluated = Vec::new();
    let mut best: Option<(Vec<usize>, TunedThreshold)> = None;
    for subset in candidate_subsets(candidates.len()) {
        let maps: Vec<&[f64]> = subset.iter().map(|&i| candidates[i]).collect();
        let tuned = tune_lambda(&vote(&maps)?, y_val, grid)?;
        evaluated.push((subset.clone(), tuned.j));
        if best.as_ref().is_none_or(|(_, b)| tuned.j > b.j) {
            best = Some((subset, tuned));
        }
    }
    let (members, tuned) = best.expect("at least one subset");
    Ok(SubsetSelection {
        ensemble: VotingEnsemble {
            members,
            lambda: tuned.lambda,
            threshold: tuned.threshold,
        },
        tuned,
        evaluated,
    })
}
