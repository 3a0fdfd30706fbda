//! k-means clustering on standardized features.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::generative::gaussian::log_softmax_in_place;

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: the first center uniformly, the rest with probability
/// proportional to the squared distance to the nearest chosen center.
pub(crate) fn plus_plus_seeds(rows: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = rows.len();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, rows[next]));
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    /// Cluster centers in standardized coordinates.
    pub centers: Vec<Vec<f64>>,
    /// Per-feature mean used for standardization.
    pub feature_mean: Vec<f64>,
    /// Per-feature variance used for standardization.
    pub feature_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub model: KMeansModel,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub sse_trace: Vec<f64>,
    pub iterations: usize,
    pub assignments: Vec<usize>,
}

impl KMeansModel {
    /// `(x − E[x]) / Var[x]` per feature; features with zero variance are only centered.
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_var)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }

    /// Nearest center, ties to the lower index.
    pub fn assign(&self, z: &[f64]) -> usize {
        nearest(&self.centers, z).0
    }

    /// Cluster probabilities of one raw sample.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardize(x);
        let d: Vec<f64> = self.centers.iter().map(|c| sq_dist(&z, c)).collect();
        let k = d.len();
        if k == 2 {
            let total = d[0] + d[1];
            if total > 0.0 {
                return d.iter().map(|di| 1.0 - di / total).collect();
            }
            return vec![0.5, 0.5];
        }
        let mut logits: Vec<f64> = d.iter().map(|v| -v).collect();
        log_softmax_in_place(&mut logits);
        logits
    }

    /// Row-major `N × K` probabilities.
    pub fn posterior(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.cols() != self.feature_mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_mean.len(),
                actual: x.cols(),
            });
        }
        Ok(x.iter_rows().flat_map(|r| self.probabilities(r)).collect())
    }

    /// Class-1 probability for a two-cluster model.
    pub fn class1_posterior(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let k = self.num_clusters();
        Ok(self.posterior(x)?.chunks_exact(k).map(|p| p[1]).collect())
    }

    /// Swaps clusters so that cluster 1 has the larger center in `column`.
    pub fn oriented(mut self, column: usize) -> Self {
        if self.centers.len() == 2 && self.centers[0][column] > self.centers[1][column] {
            self.centers.swap(0, 1);
        }
        self
    }
}

fn nearest(centers: &[Vec<f64>], z: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(z, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding on standardized features.
pub fn fit_kmeans(x: &FeatureMatrix, k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    let n = x.rows();
    let d = x.cols();
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(alloc::format!(
            "k-means needs at least k = {k} > 0 samples, got {n}"
        )));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite feature value".into()));
    }
    let mut mean = vec![0.0; d];
    for r in x.iter_rows() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for r in x.iter_rows() {
        var.iter_mut().zip(r).zip(&mean).for_each(|((s, v), m)| *s += (v - m) * (v - m));
    }
    var.iter_mut().for_each(|s| {
        *s /= n as f64;
        if !(*s > 0.0) {
            *s = 1.0;
        }
    });
    let mut model = KMeansModel {
        centers: Vec::new(),
        feature_mean: mean,
        feature_var: var,
    };
    let z: Vec<Vec<f64>> = x.iter_rows().map(|r| model.standardize(r)).collect();
    let zr: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.centers = plus_plus_seeds(&zr, k, &mut rng)
        .into_iter()
        .map(|i| z[i].clone())
        .collect();

    let mut assign = vec![usize::MAX; n];
    let mut sse_trace = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (a, dd) = nearest(&model.centers, &z[i]);
            dist[i] = dd;
            if assign[i] != a {
                assign[i] = a;
                changed = true;
            }
        }
        // empty clusters take the point farthest from its center
        let mut counts = vec![0usize; k];
        assign.iter().for_each(|&a| counts[a] += 1);
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assign[i]] > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .ok_or(Error::InvalidParameter("cannot reseed empty cluster".into()))?;
                log::warn!("k-means cluster {c} empty, reseeded from sample {far}");
                counts[assign[far]] -= 1;
                counts[c] += 1;
                assign[far] = c;
                dist[far] = 0.0;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        for i in 0..n {
            sums[assign[i]].iter_mut().zip(&z[i]).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            model.centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        let sse: f64 = (0..n).map(|i| sq_dist(&z[i], &model.centers[assign[i]])).sum();
        sse_trace.push(sse);
        if !changed {
            break;
        }
    }
    Ok(KMeansFit {
        model,
        sse_trace,
        iterations,
        assignments: assign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn two_points_two_clusters() {
        let x = FeatureMatrix::from_rows(&[vec![1.0, 5.0], vec![3.0, -1.0]]).unwrap();
        let fit = fit_kmeans(&x, 2, 7, 20).unwrap();
        let m = &fit.model;
        let mut c = m.centers.clone();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(c[0], m.standardize(&[1.0, 5.0]));
        assert_eq!(c[1], m.standardize(&[3.0, -1.0]));
    }

    #[test]
    fn equidistant_point_is_even() {
        let m = KMeansModel {
            centers: vec![vec![-1.0], vec![1.0]],
            feature_mean: vec![0.0],
            feature_var: vec![1.0],
        };
        assert_eq!(m.probabilities(&[0.0]), [0.5, 0.5]);
        let p = m.probabilities(&[0.7]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        assert!(p[1] > p[0]);
    }

    #[test]
    fn one_dimensional_matches_exhaustive_partition() {
        let data = [0.0, 0.0, 10.0, 10.0];
        let fit = fit_kmeans(&col(&data), 2, 3, 50).unwrap();
        let m = &fit.model;
        let mut centers: Vec<f64> = m.centers.iter().map(|c| c[0]).collect();
        centers.sort_by(f64::total_cmp);
        assert_eq!(centers, [m.standardize(&[0.0])[0], m.standardize(&[10.0])[0]]);

        // brute force over all nontrivial 2-partitions in standardized space
        let z: Vec<f64> = data.iter().map(|v| m.standardize(&[*v])[0]).collect();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << 4) - 1 {
            let mut sse = 0.0;
            for side in [0, 1] {
                let pts: Vec<f64> = (0..4).filter(|i| (mask >> i) & 1 == side).map(|i| z[i]).collect();
                let mu = pts.iter().sum::<f64>() / pts.len() as f64;
                sse += pts.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>();
            }
            best = best.min(sse);
        }
        assert!((fit.sse_trace.last().unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let data: Vec<f64> = (0..50).map(|i| ((i * 37) % 23) as f64).collect();
        let a = fit_kmeans(&col(&data), 3, 11, 100).unwrap();
        let b = fit_kmeans(&col(&data), 3, 11, 100).unwrap();
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_kmeans(&col(&[1.0]), 2, 0, 10).is_err());
    }
}
