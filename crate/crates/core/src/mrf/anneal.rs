//! Simulated annealing over single-pixel label flips.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{class_index, LatticeState, MrfModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaSchedule {
    /// Initial temperature; `None` uses the standard deviation of `|ΔE|`
    /// over the initial labeling.
    pub t0: Option<f64>,
    /// Cooling factor, `T ← α T` after every step.
    pub alpha: f64,
    /// Number of proposals; `None` proposes once per pixel.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl Default for SaSchedule {
    fn default() -> Self {
        Self {
            t0: None,
            alpha: 0.75,
            max_steps: None,
            seed: 0,
        }
    }
}

impl SaSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 1)".into()));
        }
        if let Some(t) = self.t0 {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter("t0 must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaResult {
    /// Best-energy state visited.
    pub state: LatticeState,
    pub steps: usize,
    pub accepted: usize,
    pub initial_temperature: f64,
}

/// Binary tree over flip energies holding subtree sums and minima.
struct FlipTree {
    n: usize,
    size: usize,
    sum: Vec<f64>,
    min: Vec<f64>,
}

impl FlipTree {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let size = n.next_power_of_two();
        let mut sum = vec![0.0; 2 * size];
        let mut min = vec![f64::INFINITY; 2 * size];
        sum[size..size + n].copy_from_slice(values);
        min[size..size + n].copy_from_slice(values);
        for i in (1..size).rev() {
            sum[i] = sum[2 * i] + sum[2 * i + 1];
            min[i] = min[2 * i].min(min[2 * i + 1]);
        }
        Self { n, size, sum, min }
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut p = self.size + i;
        self.sum[p] = v;
        self.min[p] = v;
        while p > 1 {
            p /= 2;
            self.sum[p] = self.sum[2 * p] + self.sum[2 * p + 1];
            self.min[p] = self.min[2 * p].min(self.min[2 * p + 1]);
        }
    }

    fn leaf(&self, i: usize) -> f64 {
        self.sum[self.size + i]
    }

    /// Selects by the nearest-cumulative rule with weights `e_i − min e`.
    fn select(&self, u: f64) -> usize {
        let m = self.min[1];
        let total = self.sum[1] - self.n as f64 * m;
        if !(total > 0.0) {
            return ((u * self.n as f64) as usize).min(self.n - 1);
        }
        let target = u * total;
        // first index whose cumulative weight reaches the target
        let (mut node, mut lo, mut len) = (1, 0, self.size);
        let mut prefix = 0.0;
        while node < self.size {
            len /= 2;
            let left = 2 * node;
            let real = self.n.saturating_sub(lo).min(len);
            let end = prefix + self.sum[left] - real as f64 * m;
            if end >= target {
                node = left;
            } else {
                prefix = end;
                lo += len;
                node = left + 1;
            }
        }
        let k = lo.min(self.n - 1);
        let cum_k = prefix + self.leaf(k) - m;
        if k > 0 && (target - prefix) <= (cum_k - target) {
            // previous cumulative value `prefix` is at least as close
            let mut j = k - 1;
            // earliest index sharing that cumulative value
            while j > 0 && self.leaf(j) - m == 0.0 {
                j -= 1;
            }
            return j;
        }
        k
    }
}

/// Index minimizing `|w̄_i − u|` where `w̄` is the cumulative sum of the
/// normalized weights `e_i − min e`; ties resolve to the lower index.
/// Equal energies select uniformly through `u`.
pub fn select_nearest_cumulative(energies: &[f64], u: f64) -> usize {
    FlipTree::new(energies).select(u)
}

/// Anneals from the likelihood-only labeling. Each step draws a pixel with
/// probability weighted by the energy of its flipped label, flips it when
/// `ΔE = E(y) − E(ȳ) ≤ 0` or when `exp(−ΔE/T) > u`, then cools `T ← αT`.
pub fn sa_optimize(model: &MrfModel, x: &FeatureMatrix, schedule: &SaSchedule) -> Result<SaResult> {
    schedule.validate()?;
    let mut state = LatticeState::ml_init(model, x)?;
    let (beta, order) = (model.beta, model.clique_order);
    let n = state.unary.len();
    let w = state.labels.width();
    if n == 0 {
        return Err(Error::Empty("lattice"));
    }
    let local = |s: &LatticeState, i: usize| -> (f64, f64) {
        let e = s.local_energies(i, beta, order);
        let y = class_index(*s.labels.get(i / w, i % w));
        (e[y], e[1 - y])
    };
    let mut flip = vec![0.0; n];
    let mut abs_delta = vec![0.0; n];
    for i in 0..n {
        let (cur, alt) = local(&state, i);
        flip[i] = alt;
        abs_delta[i] = (cur - alt).abs();
    }
    let t0 = schedule.t0.unwrap_or_else(|| {
        let mean = abs_delta.iter().sum::<f64>() / n as f64;
        libm::sqrt(abs_delta.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64)
    });
    let mut tree = FlipTree::new(&flip);
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let steps = schedule.max_steps.unwrap_or(n);
    let start = state.labels.clone();
    let mut energy = state.energy;
    let mut best_energy = energy;
    let mut flips: Vec<usize> = Vec::new();
    let mut best_len = 0;
    let mut temperature = t0;
    for _ in 0..steps {
        let i = tree.select(rng.random::<f64>());
        let (cur, alt) = local(&state, i);
        let delta = cur - alt;
        let u: f64 = rng.random();
        let accept = delta <= 0.0 || (temperature > 0.0 && libm::exp(-delta / temperature) > u);
        if accept {
            let (r, c) = (i / w, i % w);
            state.labels.set(r, c, -*state.labels.get(r, c));
            // a flip changes the lattice energy by the local difference
            energy -= delta;
            flips.push(i);
            tree.set(i, cur);
            for &(dr, dc) in order.offsets() {
                let rr = r as isize + dr;
                let cc = c as isize + dc;
                if rr >= 0 && cc >= 0 && (rr as usize) < state.labels.height() && (cc as usize) < w {
                    let j = rr as usize * w + cc as usize;
                    tree.set(j, local(&state, j).1);
                }
            }
            if energy > best_energy {
                best_energy = energy;
                best_len = flips.len();
            }
        }
        temperature *= schedule.alpha;
    }
    let accepted = flips.len();
    state.labels = start;
    for &i in &flips[..best_len] {
        let (r, c) = (i / w, i % w);
        state.labels.set(r, c, -*state.labels.get(r, c));
    }
    state.energy = state.total_energy(beta, order);
    Ok(SaResult {
        state,
        steps,
        accepted,
        initial_temperature: t0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generative::gaussian::{ClassGaussian, CovarianceMode, GaussianClassModel};
    use crate::mrf::CliqueOrder;

    fn linear_scan(e: &[f64], u: f64) -> usize {
        let m = e.iter().copied().fold(f64::INFINITY, f64::min);
        let total: f64 = e.iter().map(|v| v - m).sum();
        if !(total > 0.0) {
            return ((u * e.len() as f64) as usize).min(e.len() - 1);
        }
        let mut best = (0, f64::INFINITY);
        let mut cum = 0.0;
        for (i, v) in e.iter().enumerate() {
            cum += v - m;
            let d = (cum - u * total).abs();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    #[test]
    fn selection_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 3, 5, 8, 13, 64, 100] {
            for _ in 0..50 {
                // integer energies so cumulative sums are exact
                let e: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-5i32..6))).collect();
                let u: f64 = rng.random();
                assert_eq!(select_nearest_cumulative(&e, u), linear_scan(&e, u), "{e:?} {u}");
            }
        }
    }

    #[test]
    fn tree_updates_match_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut e: Vec<f64> = (0..37).map(|_| f64::from(rng.random_range(0i32..20))).collect();
        let mut t = FlipTree::new(&e);
        for _ in 0..200 {
            let i = rng.random_range(0..e.len());
            e[i] = f64::from(rng.random_range(-10i32..30));
            t.set(i, e[i]);
            let u: f64 = rng.random();
            assert_eq!(t.select(u), linear_scan(&e, u));
        }
    }

    fn model(beta: f64) -> MrfModel {
        let classes = GaussianClassModel {
            dim: 1,
            classes: vec![
                ClassGaussian { mean: vec![0.0], cov: vec![1.0], prior: 0.5 },
                ClassGaussian { mean: vec![2.0], cov: vec![1.0], prior: 0.5 },
            ],
            gamma_cov: 0.0,
            mode: CovarianceMode::Full,
        };
        MrfModel::new(classes, beta, CliqueOrder::First).unwrap()
    }

    fn frame() -> FeatureMatrix {
        let v: Vec<f64> = (0..48).map(|i| libm::sin(i as f64 * 0.7) * 1.5 + 1.0).collect();
        FeatureMatrix::new(48, 1, v).unwrap().with_shape(8, 6).unwrap()
    }

    #[test]
    fn zero_coupling_zero_temperature_keeps_ml() {
        let m = model(0.0);
        let x = frame();
        let s = SaSchedule {
            t0: Some(0.0),
            max_steps: Some(500),
            ..SaSchedule::default()
        };
        let r = sa_optimize(&m, &x, &s).unwrap();
        assert_eq!(r.state.labels, LatticeState::ml_init(&m, &x).unwrap().labels);
    }

    #[test]
    fn result_energy_at_least_initial() {
        let m = model(1.0);
        let x = frame();
        let init = LatticeState::ml_init(&m, &x).unwrap();
        let r = sa_optimize(&m, &x, &SaSchedule { seed: 4, max_steps: Some(300), ..SaSchedule::default() }).unwrap();
        assert!(r.state.energy >= init.energy);
        assert_eq!(r.state.energy, r.state.total_energy(1.0, CliqueOrder::First));
    }

    #[test]
    fn rejects_bad_alpha() {
        let s = SaSchedule {
            alpha: 1.0,
            ..SaSchedule::default()
        };
        assert!(sa_optimize(&model(1.0), &frame(), &s).is_err());
    }
}
