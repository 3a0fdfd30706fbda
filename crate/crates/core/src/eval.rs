//! Confusion matrices, the j-statistic and virtual-prior threshold tuning.
//!
//! A virtual prior `λ` scales the cloud posterior; predicting cloud when
//! `λ p > 1 − p` is the threshold rule `p > τ` with `τ = 1 / (1 + λ)`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LabelMask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn sensitivity(&self) -> Result<f64> {
        if self.positives() == 0 {
            return Err(Error::UndefinedJ("cloud pixels"));
        }
        Ok(self.tp as f64 / self.positives() as f64)
    }

    pub fn specificity(&self) -> Result<f64> {
        if self.negatives() == 0 {
            return Err(Error::UndefinedJ("clear pixels"));
        }
        Ok(self.tn as f64 / self.negatives() as f64)
    }

    pub fn accuracy(&self) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::Empty("confusion matrix"));
        }
        Ok((self.tp + self.tn) as f64 / self.total() as f64)
    }

    /// Exchanges the roles of the two classes.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }

    /// `tp · N + tn · P`, an integer proportional to `J + 1` for fixed class totals.
    fn score(&self) -> u128 {
        u128::from(self.tp) * u128::from(self.negatives()) + u128::from(self.tn) * u128::from(self.positives())
    }
}

/// Counts with cloud (1) as the positive class.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t != 0, p != 0) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

pub fn confusion_masks(y_true: &LabelMask, y_pred: &LabelMask) -> Result<ConfusionMatrix> {
    y_true.ensure_same_shape(y_pred)?;
    confusion(y_true.data(), y_pred.data())
}

/// `J = sensitivity + specificity − 1`; undefined when a class is absent.
pub fn j_statistic(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.sensitivity()? + cm.specificity()? - 1.0)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    cm.accuracy()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedThreshold {
    pub lambda: f64,
    /// Cloud is predicted when the posterior exceeds this value.
    pub threshold: f64,
    pub j: f64,
    pub confusion: ConfusionMatrix,
    /// ROC samples at the supplied grid values, by increasing `λ`.
    pub roc: Vec<RocPoint>,
}

pub fn lambda_to_threshold(lambda: f64) -> f64 {
    1.0 / (1.0 + lambda)
}

/// Inverse of [`lambda_to_threshold`]; `τ = 1` maps to the smallest positive `λ`.
pub fn threshold_to_lambda(tau: f64) -> f64 {
    ((1.0 - tau) / tau).max(f64::MIN_POSITIVE)
}

/// 101 values spaced evenly in `log λ` over `[10⁻², 10²]`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=100).map(|i| libm::pow(10.0, -2.0 + 4.0 * i as f64 / 100.0)).collect()
}

/// Hard labels under threshold `tau`.
pub fn classify(posteriors: &[f64], tau: f64) -> Vec<u8> {
    posteriors.iter().map(|&p| u8::from(p > tau)).collect()
}

/// Posteriors sorted ascending with prefix counts of cloud labels.
struct Sorted {
    p: Vec<f64>,
    cloud_prefix: Vec<u64>,
    positives: u64,
    negatives: u64,
}

impl Sorted {
    fn new(posteriors: &[f64], y: &[u8]) -> Self {
        let mut pairs: Vec<(f64, u8)> = posteriors.iter().copied().zip(y.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cloud_prefix = Vec::with_capacity(pairs.len() + 1);
        cloud_prefix.push(0);
        let mut acc = 0;
        for &(_, l) in &pairs {
            acc += u64::from(l != 0);
            cloud_prefix.push(acc);
        }
        let n = pairs.len() as u64;
        Self {
            p: pairs.into_iter().map(|(p, _)| p).collect(),
            cloud_prefix,
            positives: acc,
            negatives: n - acc,
        }
    }

    fn confusion_at(&self, tau: f64) -> ConfusionMatrix {
        // samples at or below tau are predicted clear
        let k = self.p.partition_point(|&p| p <= tau);
        let fn_ = self.cloud_prefix[k];
        let tn = k as u64 - fn_;
        ConfusionMatrix {
            tp: self.positives - fn_,
            fp: self.negatives - tn,
            tn,
            fn_,
        }
    }

    /// One threshold per realizable split of the sorted posteriors, chosen as
    /// close to ½ as the split allows.
    fn split_thresholds(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut distinct: Vec<f64> = self.p.clone();
        distinct.dedup();
        let lo = distinct[0];
        // everything cloud
        if lo > 0.5 {
            out.push(0.5);
        } else if lo / 2.0 > 0.0 {
            out.push(lo / 2.0);
        }
        for w in distinct.windows(2) {
            let (a, b) = (w[0], w[1]);
            let tau = if a <= 0.5 && 0.5 < b {
                0.5
            } else if a > 0.5 {
                a
            } else {
                let mid = a + (b - a) / 2.0;
                if mid < b {
                    mid
                } else {
                    a
                }
            };
            out.push(tau);
        }
        // everything clear
        let hi = distinct[distinct.len() - 1];
        out.push(if hi <= 0.5 { 0.5 } else { hi.min(1.0) });
        out
    }
}

/// Picks the threshold maximizing J over `grid` and every split induced by
/// the sorted posteriors. Ties go to `λ` closest to 1, i.e. `τ` closest to ½.
pub fn tune_lambda(posteriors: &[f64], y_true: &[u8], grid: &[f64]) -> Result<TunedThreshold> {
    if posteriors.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: posteriors.len(),
        });
    }
    if grid.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(alloc::format!("lambda {l} must be finite and > 0")));
    }
    if posteriors.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidValue("posteriors must lie in [0, 1]".into()));
    }
    let sorted = Sorted::new(posteriors, y_true);
    if sorted.positives == 0 {
        return Err(Error::UndefinedJ("cloud pixels"));
    }
    if sorted.negatives == 0 {
        return Err(Error::UndefinedJ("clear pixels"));
    }
    let mut grid_sorted = grid.to_vec();
    grid_sorted.sort_by(f64::total_cmp);
    let mut roc = Vec::with_capacity(grid_sorted.len());
    let mut best: Option<(u128, f64, ConfusionMatrix)> = None;
    let mut consider = |tau: f64, cm: ConfusionMatrix| {
        let s = cm.score();
        let better = match &best {
            None => true,
            Some((bs, bt, _)) => s > *bs || (s == *bs && ((tau - 0.5).abs() < (bt - 0.5).abs() || ((tau - 0.5).abs() == (bt - 0.5).abs() && tau < *bt))),
        };
        if better {
            best = Some((s, tau, cm));
        }
    };
    for &lambda in &grid_sorted {
        let tau = lambda_to_threshold(lambda);
        let cm = sorted.confusion_at(tau);
        roc.push(RocPoint {
            fpr: cm.fp as f64 / cm.negatives() as f64,
            tpr: cm.tp as f64 / cm.positives() as f64,
            lambda,
        });
        consider(tau, cm);
    }
    for tau in sorted.split_thresholds() {
        consider(tau, sorted.confusion_at(tau));
    }
    let (_, threshold, confusion) = best.expect("grid is non-empty");
    Ok(TunedThreshold {
        lambda: threshold_to_lambda(threshold),
        threshold,
        j: j_statistic(&confusion)?,
        confusion,
        roc,
    })
}
