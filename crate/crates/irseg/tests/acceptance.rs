//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p irseg --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use irseg::config::{log_space, CvGrid};
use irseg::cv::{fit_selected, loo_cv};
use irseg::data::{training_frames, Dataset, FeatureSet};
use irseg_core::dataset::Split;
use irseg_core::discriminative::{gp_gradient, probit_probability, rr_fit, svc_fit};
use irseg_core::discriminative::{sigmoid, LinearKind, LinearModel, LinearParams};
use irseg_core::ensemble::select_subset;
use irseg_core::eval::{confusion, default_lambda_grid, j_statistic, tune_lambda, ConfusionMatrix};
use irseg_core::features::{FeatureMatrix, FeatureSpec, FeatureVariant, Neighborhood, PolyExpansion};
use irseg_core::generative::{fit_gmm, ClassGaussian, CovarianceMode, GaussianClassModel, GmmParams};
use irseg_core::model::{ModelKind, ModelParams, SegmentationModel};
use irseg_core::mrf::{map_optimize, CliqueOrder, LatticeState, MrfModel};
use irseg_core::synth::{generate, SceneConfig};
use irseg_core::SiteParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(l) = limit {
        if elapsed > l {
            pass = false;
            detail.push_str(&format!("; runtime over {}s", l.as_secs()));
        }
    }
    println!(
        "criterion {n:>2} {name}: {} ({:.1}s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

// ---------------------------------------------------------------- criterion 1

/// Likelihood energy `−½ log det Σ − ½ (x−μ)ᵀ Σ⁻¹ (x−μ)` for d ≤ 2.
fn gauss_energy(x: &[f64], c: &ClassGaussian) -> f64 {
    match x.len() {
        1 => {
            let v = c.cov[0];
            let d = x[0] - c.mean[0];
            -0.5 * v.ln() - 0.5 * d * d / v
        }
        2 => {
            let (a, b, cc) = (c.cov[0], c.cov[1], c.cov[3]);
            let det = a * cc - b * b;
            let (d0, d1) = (x[0] - c.mean[0], x[1] - c.mean[1]);
            let m = (cc * d0 * d0 - 2.0 * b * d0 * d1 + a * d1 * d1) / det;
            -0.5 * det.ln() - 0.5 * m
        }
        _ => unreachable!(),
    }
}

fn lattice_pairs(w: usize, h: usize, second: bool) -> Vec<(usize, usize)> {
    let n = w * h;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dr = (i / w).abs_diff(j / w);
            let dc = (i % w).abs_diff(j % w);
            let adjacent = if second { dr.max(dc) == 1 } else { dr + dc == 1 };
            if adjacent {
                out.push((i, j));
            }
        }
    }
    out
}

fn oracle_energy(unary: &[[f64; 2]], pairs: &[(usize, usize)], beta: f64, y: &[i8]) -> f64 {
    let u: f64 = y.iter().zip(unary).map(|(&l, e)| e[usize::from(l > 0)]).sum();
    let p: f64 = pairs.iter().map(|&(i, j)| f64::from(y[i]) * f64::from(y[j])).sum();
    u + beta * p
}

fn random_class(rng: &mut ChaCha8Rng, d: usize) -> ClassGaussian {
    let mean: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let l: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] = (0..d).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
        }
        cov[i * d + i] += 0.2;
    }
    ClassGaussian { mean, cov, prior: 0.5 }
}

fn mrf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_local = f64::NEG_INFINITY;
    let mut worst_energy = 0.0f64;
    let mut runs = 0;
    let mut improved_by_global = 0;
    for &(w, h) in &[(3usize, 3usize), (4, 3)] {
        for _ in 0..20 {
            let d = rng.random_range(1..=2usize);
            let classes = GaussianClassModel {
                dim: d,
                classes: vec![random_class(&mut rng, d), random_class(&mut rng, d)],
                gamma_cov: 0.0,
                mode: CovarianceMode::Full,
            };
            let beta = rng.random_range(0.0..2.0);
            let second = rng.random_bool(0.5);
            let order = if second { CliqueOrder::Second } else { CliqueOrder::First };
            let n = w * h;
            let mut data = Vec::with_capacity(n * d);
            for _ in 0..n {
                let k = rng.random_range(0..2usize);
                for j in 0..d {
                    data.push(classes.classes[k].mean[j] + rng.random_range(-1.5..1.5));
                }
            }
            let x = FeatureMatrix::new(n, d, data).unwrap().with_shape(w, h).unwrap();
            let unary: Vec<[f64; 2]> = x
                .iter_rows()
                .map(|r| [gauss_energy(r, &classes.classes[0]), gauss_energy(r, &classes.classes[1])])
                .collect();
            let model = MrfModel::new(classes, beta, order).unwrap();
            let mut state = LatticeState::ml_init(&model, &x).unwrap();
            let sweeps = map_optimize(&model, &mut state, 10_000);
            assert!(sweeps < 10_000, "no convergence");
            let pairs = lattice_pairs(w, h, second);
            let y: Vec<i8> = state.labels.data().to_vec();
            let e = oracle_energy(&unary, &pairs, beta, &y);
            worst_energy = worst_energy.max((e - state.energy).abs() / e.abs().max(1.0));
            for i in 0..n {
                let mut f = y.clone();
                f[i] = -f[i];
                worst_local = worst_local.max(oracle_energy(&unary, &pairs, beta, &f) - e);
            }
            let mut best = f64::NEG_INFINITY;
            for mask in 0u32..(1 << n) {
                let cand: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
                best = best.max(oracle_energy(&unary, &pairs, beta, &cand));
            }
            assert!(best >= e - 1e-9, "global MAP below converged energy");
            if best > e + 1e-9 {
                improved_by_global += 1;
            }
            runs += 1;
        }
    }
    let pass = worst_local <= 1e-9 && worst_energy <= 1e-9;
    outcome(
        pass,
        format!(
            "{runs} lattices; max single-flip gain {worst_local:.2e}; energy mismatch {worst_energy:.2e}; \
             global MAP strictly higher in {improved_by_global}"
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

fn em_recovery() -> Outcome {
    let mut worst_drop = f64::NEG_INFINITY;
    let mut worst_err = 0.0f64;
    for run in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + run);
        let sigma: [f64; 2] = [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
        let sep = rng.random_range(5.0..8.0) * sigma[0].max(sigma[1]);
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let m0 = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        let m1 = [m0[0] + sep * angle.cos(), m0[1] + sep * angle.sin()];
        let weight = rng.random_range(0.3..0.7);
        let n = 400;
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let (m, s) = if rng.random_bool(weight) { (m0, sigma[0]) } else { (m1, sigma[1]) };
            for j in 0..2 {
                let z: f64 = rng.sample(StandardNormal);
                data.push(m[j] + s * z);
            }
        }
        let x = FeatureMatrix::new(n, 2, data).unwrap();
        let params = GmmParams {
            gamma_cov: 0.0,
            seed: run,
            ..GmmParams::default()
        };
        let fit = fit_gmm(&x, &params).unwrap();
        for pair in fit.log_likelihood.windows(2) {
            worst_drop = worst_drop.max(pair[0] - pair[1]);
        }
        let means: Vec<&[f64]> = fit.model.classes.iter().map(|c| c.mean.as_slice()).collect();
        let dist = |a: &[f64], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let straight = dist(means[0], &m0) / sigma[0] + dist(means[1], &m1) / sigma[1];
        let swapped = dist(means[1], &m0) / sigma[0] + dist(means[0], &m1) / sigma[1];
        let err = if straight <= swapped {
            (dist(means[0], &m0) / sigma[0]).max(dist(means[1], &m1) / sigma[1])
        } else {
            (dist(means[1], &m0) / sigma[0]).max(dist(means[0], &m1) / sigma[1])
        };
        worst_err = worst_err.max(err);
    }
    outcome(
        worst_drop <= 1e-8 && worst_err <= 0.5,
        format!("100 runs; largest log-likelihood drop {worst_drop:.2e}; worst mean error {worst_err:.3}σ"),
    )
}

// ---------------------------------------------------------------- criterion 3

fn random_design(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        data.push(1.0);
        data.extend((1..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
    }
    FeatureMatrix::new(n, d, data).unwrap()
}

fn mat_vec(x: &FeatureMatrix, w: &[f64]) -> Vec<f64> {
    x.iter_rows().map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
}

fn rr_oracle(x: &FeatureMatrix, y: &[f64], gamma: f64) -> Vec<f64> {
    let d = x.cols();
    // step 1/L with L bounded by the trace of the Hessian
    let l: f64 = x.data().iter().map(|v| v * v).sum::<f64>() + gamma;
    let mut w = vec![0.0; d];
    for _ in 0..2_000_000 {
        let r: Vec<f64> = mat_vec(x, &w).iter().zip(y).map(|(p, t)| p - t).collect();
        let mut g: Vec<f64> = w.iter().map(|v| gamma * v).collect();
        for (row, ri) in x.iter_rows().zip(&r) {
            g.iter_mut().zip(row).for_each(|(gj, v)| *gj += ri * v);
        }
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-13 {
            break;
        }
        w.iter_mut().zip(&g).for_each(|(wj, gj)| *wj -= gj / l);
    }
    w
}

fn svc_obj(x: &FeatureMatrix, y: &[f64], w: &[f64], c: f64) -> f64 {
    let m = mat_vec(x, w);
    0.5 * w.iter().map(|v| v * v).sum::<f64>()
        + c * m.iter().zip(y).map(|(mi, yi)| (1.0 - yi * mi).max(0.0).powi(2)).sum::<f64>()
}

/// Gradient descent with Armijo backtracking on a differentiable convex objective.
fn minimize(f: impl Fn(&[f64]) -> f64, grad: impl Fn(&[f64]) -> Vec<f64>, d: usize) -> Vec<f64> {
    let mut w = vec![0.0; d];
    let mut fw = f(&w);
    for _ in 0..200_000 {
        let g = grad(&w);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() < 1e-11 {
            break;
        }
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let fc = f(&cand);
            if fc <= fw - 0.5 * t * gg || t < 1e-20 {
                w = cand;
                fw = fc;
                break;
            }
            t *= 0.5;
        }
    }
    w
}

fn gp_log_post(x: &FeatureMatrix, y: &[f64], w: &[f64], gamma: f64) -> f64 {
    let m = mat_vec(x, w);
    let ll: f64 = m
        .iter()
        .zip(y)
        .map(|(a, t)| {
            let p = 1.0 / (1.0 + (-a).exp());
            t * p.ln() + (1.0 - t) * (1.0 - p).ln()
        })
        .sum();
    ll - 0.5 * w.iter().map(|v| v * v).sum::<f64>() / gamma
}

fn solver_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rr_err = 0.0f64;
    for _ in 0..20 {
        let x = random_design(&mut rng, 30, 4);
        let y: Vec<f64> = (0..30).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let gamma = rng.random_range(0.1..10.0);
        let w = rr_fit(&x, &y, gamma).unwrap();
        let o = rr_oracle(&x, &y, gamma);
        rr_err = rr_err.max(w.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let mut svc_gap = 0.0f64;
    for _ in 0..20 {
        let x = random_design(&mut rng, 10, 3);
        let y: Vec<f64> = (0..10).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let c = rng.random_range(0.1..10.0);
        let w = svc_fit(&x, &y, c, 100, 1e-12).unwrap();
        let grad = |w: &[f64]| {
            let m = mat_vec(&x, w);
            let mut g = w.to_vec();
            for (row, (mi, yi)) in x.iter_rows().zip(m.iter().zip(&y)) {
                let s = 1.0 - yi * mi;
                if s > 0.0 {
                    g.iter_mut().zip(row).for_each(|(gj, v)| *gj -= 2.0 * c * yi * s * v);
                }
            }
            g
        };
        let o = minimize(|w| svc_obj(&x, &y, w, c), grad, 3);
        svc_gap = svc_gap.max((svc_obj(&x, &y, &w, c) - svc_obj(&x, &y, &o, c)).abs());
    }
    let mut gp_rel = 0.0f64;
    for _ in 0..20 {
        let x = random_design(&mut rng, 25, 4);
        let y: Vec<f64> = (0..25).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let gamma = rng.random_range(0.1..10.0);
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = gp_gradient(&x, &y, &w, gamma);
        let h = 1e-5;
        let fd: Vec<f64> = (0..4)
            .map(|j| {
                let mut a = w.clone();
                let mut b = w.clone();
                a[j] += h;
                b[j] -= h;
                (gp_log_post(&x, &y, &a, gamma) - gp_log_post(&x, &y, &b, gamma)) / (2.0 * h)
            })
            .collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        gp_rel = gp_rel.max(num / den);
    }
    outcome(
        rr_err <= 1e-6 && svc_gap <= 1e-6 && gp_rel < 1e-4,
        format!("RR max weight diff {rr_err:.2e}; SVC max objective gap {svc_gap:.2e}; GP max relative gradient error {gp_rel:.2e}"),
    )
}

// ---------------------------------------------------------------- criterion 4

fn probit_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut max_var = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(4..9);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        y[0] = 0;
        y[1] = 1;
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let params = LinearParams {
            hyperparameter: rng.random_range(1.0..30.0),
            standardize: false,
            tol: 1e-12,
            ..LinearParams::default()
        };
        let model = LinearModel::fit(LinearKind::Gp, &x, &y, &params).unwrap();
        let q = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let predicted = model.predict(&FeatureMatrix::from_rows(std::slice::from_ref(&q)).unwrap()).unwrap()[0];
        let phi = model.expansion().unwrap().expand(&q).unwrap();
        let cov = model.posterior_cov.as_ref().unwrap();
        let d = phi.len();
        let mean: f64 = phi.iter().zip(&model.weights).map(|(a, b)| a * b).sum();
        let var: f64 = (0..d)
            .map(|a| (0..d).map(|b| phi[a] * cov[a * d + b] * phi[b]).sum::<f64>())
            .sum();
        max_var = max_var.max(var);
        let sd = var.sqrt();
        let samples = 1_000_000;
        let mc = (0..samples)
            .map(|_| sigmoid(mean + sd * rng.sample::<f64, _>(StandardNormal)))
            .sum::<f64>()
            / samples as f64;
        assert!((predicted - probit_probability(mean, var)).abs() < 1e-12);
        worst = worst.max((predicted - mc).abs());
    }
    outcome(
        worst <= 0.02,
        format!("50 predictive pairs (variance up to {max_var:.1}); max |probit − Monte Carlo| {worst:.4}"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn kernel_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for n in 1..=3u32 {
        for d in [2usize, 3, 6] {
            for _ in 0..100 {
                let a0 = rng.random_range(1.0..3.0);
                let s = 1.0 / (d as f64).sqrt();
                let x: Vec<f64> = (0..d).map(|_| s * rng.random_range(-1.0..1.0)).collect();
                let z: Vec<f64> = (0..d).map(|_| s * rng.random_range(-1.0..1.0)).collect();
                let e = PolyExpansion::new(d, n, a0, 4096).unwrap();
                let lhs: f64 = e.expand(&x).unwrap().iter().zip(e.expand(&z).unwrap()).map(|(a, b)| a * b).sum();
                let rhs = (a0 + x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).powi(n as i32);
                worst = worst.max((lhs - rhs).abs() / rhs.abs());
            }
        }
    }
    outcome(worst < 1e-9, format!("900 pairs; max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 6

fn score_of(tp: u64, tn: u64, pos: u64, neg: u64) -> u128 {
    u128::from(tp) * u128::from(neg) + u128::from(tn) * u128::from(pos)
}

fn lambda_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = default_lambda_grid();
    let mut mismatches = 0;
    for case in 0..200 {
        let n = rng.random_range(2..=500usize);
        let quantize = case % 3 == 0;
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
        y[0] = 0;
        y[1] = 1;
        let p: Vec<f64> = y
            .iter()
            .map(|&l| {
                let v: f64 = (rng.random_range(0.0..1.0) + 0.3 * f64::from(l)).min(1.0);
                if quantize { (v * 10.0).round() / 10.0 } else { v }
            })
            .collect();
        let pos = y.iter().filter(|&&l| l == 1).count() as u64;
        let neg = n as u64 - pos;
        // every distinct threshold: cloud iff p > t, with t below all values or at each value
        let mut ts: Vec<f64> = p.clone();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.insert(0, f64::NEG_INFINITY);
        let best = ts
            .iter()
            .map(|&t| {
                let tp = p.iter().zip(&y).filter(|(v, l)| **v > t && **l == 1).count() as u64;
                let tn = p.iter().zip(&y).filter(|(v, l)| **v <= t && **l == 0).count() as u64;
                score_of(tp, tn, pos, neg)
            })
            .max()
            .unwrap();
        let tuned = tune_lambda(&p, &y, &grid).unwrap();
        let cm: ConfusionMatrix = tuned.confusion;
        let replay = confusion(&y, &p.iter().map(|&v| u8::from(v > tuned.threshold)).collect::<Vec<_>>()).unwrap();
        let ok = score_of(cm.tp, cm.tn, pos, neg) == best
            && replay == cm
            && tuned.j == j_statistic(&cm).unwrap();
        if !ok {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("200 cases; {mismatches} mismatches against the exhaustive scan"))
}

// ------------------------------------------------------- synthetic benchmark

const SUPERVISED: [ModelKind; 6] = [
    ModelKind::Gda,
    ModelKind::Nbc,
    ModelKind::Mrf,
    ModelKind::Rr,
    ModelKind::Svc,
    ModelKind::Gp,
];
const VARIANTS: [FeatureVariant; 3] = [FeatureVariant::X1, FeatureVariant::X3, FeatureVariant::X4];

struct Fitted {
    model: SegmentationModel,
    cv_j: f64,
    test_j: f64,
}

struct Benchmark {
    ds: Dataset,
    fs: FeatureSet,
    train: Vec<usize>,
    test: Vec<usize>,
    fitted: BTreeMap<(ModelKind, FeatureVariant), Fitted>,
}

fn pooled_j(b: &Dataset, fs: &FeatureSet, idx: &[usize], model: &SegmentationModel) -> f64 {
    let xs = fs.design(&model.spec, idx).unwrap();
    let mut yt = Vec::new();
    let mut yp = Vec::new();
    for (x, &i) in xs.iter().zip(idx) {
        yp.extend(model.classify(x).unwrap());
        yt.extend_from_slice(b.frames[i].labels().unwrap());
    }
    j_statistic(&confusion(&yt, &yp).unwrap()).unwrap()
}

fn build_benchmark() -> Benchmark {
    let site = SiteParams::default();
    let scene = generate(&SceneConfig::default(), &site).unwrap();
    let ds = Dataset::from_scene(&scene, site);
    let fs = ds.features().unwrap();
    let train = ds.indices(Split::Train);
    let test = ds.indices(Split::Test);
    let params = ModelParams::default();
    let grid_lambda = default_lambda_grid();
    let mut fitted = BTreeMap::new();
    for kind in SUPERVISED {
        for v in VARIANTS {
            let grid = CvGrid {
                variants: vec![v],
                neighborhoods: vec![Neighborhood::Single, Neighborhood::FirstOrder],
                expansion_orders: vec![1],
                hyperparameters: if kind.uses_expansion() { log_space(1e-2, 1e2, 5) } else { vec![1.0] },
                betas: vec![0.5, 1.0, 2.0],
            };
            let (report, _) = loo_cv(&ds, &fs, &train, kind, &params, &grid, &grid_lambda).unwrap();
            let model = fit_selected(&ds, &fs, &train, &report).unwrap();
            let test_j = pooled_j(&ds, &fs, &test, &model);
            let cv_j = report.best().mean_j.unwrap();
            fitted.insert((kind, v), Fitted { model, cv_j, test_j });
        }
    }
    Benchmark {
        ds,
        fs,
        train,
        test,
        fitted,
    }
}

static BENCH: OnceLock<Benchmark> = OnceLock::new();

fn benchmark() -> &'static Benchmark {
    BENCH.get_or_init(build_benchmark)
}

fn end_to_end() -> Outcome {
    let b = benchmark();
    let mut lines = Vec::new();
    let mut all_above = true;
    let mut improved = 0;
    for kind in SUPERVISED {
        let j = |v| b.fitted[&(kind, v)].test_j;
        // the variant a practitioner would pick: highest LOO J
        let chosen = VARIANTS
            .into_iter()
            .max_by(|a, c| b.fitted[&(kind, *a)].cv_j.total_cmp(&b.fitted[&(kind, *c)].cv_j))
            .unwrap();
        let best_pre = j(FeatureVariant::X3).max(j(FeatureVariant::X4));
        all_above &= j(chosen) >= 0.90;
        if best_pre - j(FeatureVariant::X1) >= 0.05 {
            improved += 1;
        }
        lines.push(format!(
            "{}: X1 {:.3} X3 {:.3} X4 {:.3} (selected {:?})",
            kind.name(),
            j(FeatureVariant::X1),
            j(FeatureVariant::X3),
            j(FeatureVariant::X4),
            chosen
        ));
    }
    outcome(
        all_above && improved >= 4,
        format!("{}; X3/X4 ahead of X1 by 0.05 for {improved}/6", lines.join("; ")),
    )
}

fn predict_median_ms(model: &SegmentationModel, xs: &[FeatureMatrix], reps: usize) -> f64 {
    let mut t = Vec::with_capacity(xs.len() * reps);
    for _ in 0..reps {
        for x in xs {
            let s = Instant::now();
            std::hint::black_box(model.classify(x).unwrap());
            t.push(s.elapsed().as_secs_f64() * 1e3);
        }
    }
    t.sort_by(f64::total_cmp);
    t[t.len() / 2]
}

fn latency_ordering() -> Outcome {
    let b = benchmark();
    let spec = FeatureSpec::new(FeatureVariant::X3, Neighborhood::FirstOrder);
    let xtr = b.fs.design(&spec, &b.train).unwrap();
    let xte = b.fs.design(&spec, &b.test).unwrap();
    let frames = training_frames(&xtr, b.train.iter().map(|&i| &b.ds.frames[i])).unwrap();
    let mut t = BTreeMap::new();
    for kind in [ModelKind::Rr, ModelKind::Svc, ModelKind::Gp, ModelKind::IcmMrf] {
        let model = SegmentationModel::fit(kind, spec, &ModelParams::default(), &frames).unwrap();
        predict_median_ms(&model, &xte, 3);
        t.insert(kind, predict_median_ms(&model, &xte, 30));
    }
    let (rr, svc, gp, icm) = (t[&ModelKind::Rr], t[&ModelKind::Svc], t[&ModelKind::Gp], t[&ModelKind::IcmMrf]);
    // RR and SVC predictions cost the same dot product; allow timer noise between them
    let pass = rr <= 1.25 * svc && svc < gp && gp < icm;
    outcome(
        pass,
        format!("median ms/frame: rr {rr:.3}, svc {svc:.3}, gp {gp:.3}, icm-mrf {icm:.3}"),
    )
}

fn voting() -> Outcome {
    let b = benchmark();
    let grid = default_lambda_grid();
    let spec = FeatureSpec::new(FeatureVariant::X3, Neighborhood::FirstOrder);
    let mut candidates: Vec<(String, &SegmentationModel)> = Vec::new();
    let mut owned = Vec::new();
    for kind in SUPERVISED {
        let v = [FeatureVariant::X3, FeatureVariant::X4]
            .into_iter()
            .max_by(|a, c| b.fitted[&(kind, *a)].cv_j.total_cmp(&b.fitted[&(kind, *c)].cv_j))
            .unwrap();
        candidates.push((format!("{}/{v:?}", kind.name()), &b.fitted[&(kind, v)].model));
    }
    let xtr = b.fs.design(&spec, &b.train).unwrap();
    let frames = training_frames(&xtr, b.train.iter().map(|&i| &b.ds.frames[i])).unwrap();
    for kind in [ModelKind::Gmm, ModelKind::KMeans, ModelKind::IcmMrf] {
        let mut m = SegmentationModel::fit(kind, spec, &ModelParams::default(), &frames).unwrap();
        m.tune_on(&frames, &grid).unwrap();
        owned.push((kind.name().to_string(), m));
    }
    candidates.extend(owned.iter().map(|(n, m)| (n.clone(), m)));
    let mut y = Vec::new();
    let mut maps: Vec<Vec<f64>> = vec![Vec::new(); candidates.len()];
    for &i in &b.test {
        y.extend_from_slice(b.ds.frames[i].labels().unwrap());
    }
    for (k, (_, m)) in candidates.iter().enumerate() {
        for x in b.fs.design(&m.spec, &b.test).unwrap() {
            maps[k].extend(m.posterior(&x).unwrap());
        }
    }
    let refs: Vec<&[f64]> = maps.iter().map(Vec::as_slice).collect();
    let singles: Vec<f64> = refs.iter().map(|p| tune_lambda(p, &y, &grid).unwrap().j).collect();
    let (best_i, best_single) = singles
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, j)| (i, *j))
        .unwrap();
    let sel = select_subset(&refs, &y, &grid).unwrap();
    let rescored = sel.evaluated.iter().all(|(_, j)| *j <= sel.tuned.j);
    let names: Vec<&str> = sel.ensemble.members.iter().map(|&i| candidates[i].0.as_str()).collect();
    outcome(
        sel.tuned.j >= best_single && rescored,
        format!(
            "{} candidates, {} subsets; ensemble {{{}}} J {:.4} vs best single {} J {:.4}",
            candidates.len(),
            sel.evaluated.len(),
            names.join(", "),
            sel.tuned.j,
            candidates[best_i].0,
            best_single
        ),
    )
}

// ---------------------------------------------------------------- criterion 10

fn run_pipeline(dir: &Path, threads: &str) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(
        dir.join("run.toml"),
        r#"
seed = 11
out = "data"
manifest = "data/manifest.csv"
clear_sky_dir = "data/clear_sky"

[features]
variant = "x4"
neighborhood = "first_order"

[cv]
variants = ["x3", "x4"]
neighborhoods = ["single"]
hyperparameters = [0.1, 10.0]
"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_irseg");
    let steps: Vec<Vec<&str>> = vec![
        vec!["synth", "--config", "run.toml"],
        vec!["train", "--config", "run.toml", "--model", "gda", "--out", "gda"],
        vec!["train", "--config", "run.toml", "--model", "sa-icm-mrf", "--out", "sa-icm"],
        vec!["cv", "--config", "run.toml", "--model", "svc", "--out", "svc"],
        vec!["segment", "--config", "run.toml", "--model-file", "svc/model.json", "--out", "svc/seg", "--png"],
        vec!["segment", "--config", "run.toml", "--model-file", "sa-icm/model.json", "--out", "sa-icm/seg"],
        vec![
            "vote", "--config", "run.toml", "--model-file", "gda/model.json", "--model-file", "svc/model.json",
            "--model-file", "sa-icm/model.json", "--out", "vote",
        ],
    ];
    for args in steps {
        let out = Command::new(bin)
            .args(&args)
            .current_dir(dir)
            .env("IRSEG_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_pipeline(&a, "1");
    run_pipeline(&b, "4");
    let (ta, tb) = (tree(&a), tree(&b));
    // wall-clock timings are the only intended difference
    let compared: Vec<&String> = ta.keys().filter(|k| !k.contains("timings")).collect();
    let differing: Vec<&&String> = compared.iter().filter(|k| tb.get(**k) != ta.get(**k)).collect();
    let same_names = ta.keys().eq(tb.keys());
    outcome(
        same_names && differing.is_empty(),
        format!(
            "{} files compared across 1 and 4 threads; {} differ{}",
            compared.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {differing:?}") }
        ),
    )
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "MRF sweep vs exhaustive MAP", Some(s(30)), mrf_oracle),
        criterion(2, "EM monotonicity and recovery", Some(s(20)), em_recovery),
        criterion(3, "RR/SVC/GP solver oracles", Some(s(30)), solver_checks),
        criterion(4, "probit predictive accuracy", None, probit_accuracy),
        criterion(5, "polynomial kernel identity", None, kernel_identity),
        criterion(6, "lambda tuning vs exhaustive scan", None, lambda_oracle),
        criterion(7, "end-to-end synthetic benchmark", Some(s(300)), end_to_end),
        criterion(8, "latency ordering", None, latency_ordering),
        criterion(9, "voting ensemble vs best member", None, voting),
        criterion(10, "bit-identical reruns", None, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
