//! Leave-one-out cross-validation over feature and hyperparameter grids.

use std::cmp::Ordering;
use std::time::Instant;

use irseg_core::eval::tune_lambda;
use irseg_core::features::{FeatureMatrix, FeatureSpec};
use irseg_core::model::{ModelKind, ModelParams, SegmentationModel, TrainingFrame};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CvGrid;
use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub spec: FeatureSpec,
    pub hyperparameter: f64,
    pub beta: f64,
}

impl Combination {
    pub fn params(&self, base: &ModelParams) -> ModelParams {
        ModelParams {
            hyperparameter: self.hyperparameter,
            beta: self.beta,
            ..*base
        }
    }

    /// Tie-break order: expansion order, neighborhood, hyperparameter, β, variant.
    fn order(&self, other: &Self) -> Ordering {
        self.spec
            .expansion_order
            .cmp(&other.spec.expansion_order)
            .then(self.spec.neighborhood.cmp(&other.spec.neighborhood))
            .then(self.hyperparameter.total_cmp(&other.hyperparameter))
            .then(self.beta.total_cmp(&other.beta))
            .then(self.spec.variant.cmp(&other.spec.variant))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub combination: Combination,
    /// Held-out J per fold; `None` for skipped folds.
    pub fold_j: Vec<Option<f64>>,
    pub mean_j: Option<f64>,
    /// Virtual prior tuned on the pooled held-out posteriors.
    pub lambda: f64,
    pub threshold: f64,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub schema_version: u32,
    pub model: ModelKind,
    pub params: ModelParams,
    /// Name of the held-out frame of each fold.
    pub folds: Vec<String>,
    pub entries: Vec<CvEntry>,
    /// Index of the selected entry.
    pub selected: usize,
}

/// Wall-clock means per entry, kept apart from the report so that reports
/// stay reproducible bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTimings {
    pub schema_version: u32,
    pub model: ModelKind,
    /// Mean fit time per fold, milliseconds.
    pub fit_ms: Vec<f64>,
    /// Mean held-out prediction time per frame, milliseconds.
    pub predict_ms: Vec<f64>,
}

impl CvReport {
    pub fn best(&self) -> &CvEntry {
        &self.entries[self.selected]
    }

    /// One row per entry: feature vector, neighborhood, expansion, J.
    pub fn to_csv(&self, timings: Option<&CvTimings>) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "variant",
            "neighborhood",
            "expansion_order",
            "hyperparameter",
            "beta",
            "mean_j",
            "lambda",
            "valid_folds",
        ];
        if timings.is_some() {
            header.extend(["fit_ms", "predict_ms"]);
        }
        let err = |e: csv::Error| Error::Data(e.to_string());
        w.write_record(&header).map_err(err)?;
        for (i, e) in self.entries.iter().enumerate() {
            let c = &e.combination;
            let mut rec = vec![
                enum_name(&c.spec.variant),
                enum_name(&c.spec.neighborhood),
                c.spec.expansion_order.to_string(),
                c.hyperparameter.to_string(),
                c.beta.to_string(),
                e.mean_j.map(|j| format!("{j:.6}")).unwrap_or_default(),
                e.lambda.to_string(),
                e.fold_j.iter().flatten().count().to_string(),
            ];
            if let Some(t) = timings {
                rec.push(format!("{:.3}", t.fit_ms[i]));
                rec.push(format!("{:.3}", t.predict_ms[i]));
            }
            w.write_record(&rec).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn combinations(kind: ModelKind, base: &ModelParams, grid: &CvGrid, bias: f64) -> Vec<Combination> {
    let mut out = Vec::new();
    for spec in grid.specs_for(kind, bias) {
        for &h in &grid.hyperparameters_for(kind, base) {
            for &b in &grid.betas_for(kind, base) {
                out.push(Combination {
                    spec,
                    hyperparameter: h,
                    beta: b,
                });
            }
        }
    }
    out.sort_by(Combination::order);
    out
}

struct FoldOutcome {
    j: Option<f64>,
    posterior: Vec<f64>,
    error: Option<String>,
    fit_ms: f64,
    predict_ms: f64,
}

fn run_fold(
    kind: ModelKind,
    spec: FeatureSpec,
    params: &ModelParams,
    designs: &[FeatureMatrix],
    labels: &[&[u8]],
    held: usize,
    grid: &[f64],
) -> FoldOutcome {
    let frames: Vec<TrainingFrame<'_>> = (0..designs.len())
        .filter(|&i| i != held)
        .map(|i| TrainingFrame {
            features: &designs[i],
            labels: labels[i],
        })
        .collect();
    let failed = |e: irseg_core::Error, fit_ms| FoldOutcome {
        j: None,
        posterior: Vec::new(),
        error: Some(e.to_string()),
        fit_ms,
        predict_ms: 0.0,
    };
    let t0 = Instant::now();
    let model = match SegmentationModel::fit(kind, spec, params, &frames) {
        Ok(m) => m,
        Err(e) => return failed(e, 0.0),
    };
    let fit_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    let posterior = match model.posterior(&designs[held]) {
        Ok(p) => p,
        Err(e) => return failed(e, fit_ms),
    };
    let predict_ms = t1.elapsed().as_secs_f64() * 1e3;
    let j = match tune_lambda(&posterior, labels[held], grid) {
        Ok(t) => Some(t.j),
        Err(irseg_core::Error::UndefinedJ(_)) => None,
        Err(e) => return failed(e, fit_ms),
    };
    FoldOutcome {
        j,
        posterior,
        error: None,
        fit_ms,
        predict_ms,
    }
}

/// Runs every combination of the grid over the leave-one-out folds of
/// the `train` frames and selects the highest mean held-out J.
///
/// Each fold tunes λ on its held-out image and scores it there. Folds
/// whose held-out image has a single class are skipped with a warning.
/// The λ stored per entry is tuned on all held-out posteriors pooled.
pub fn loo_cv(
    ds: &Dataset,
    features: &FeatureSet,
    train: &[usize],
    kind: ModelKind,
    base: &ModelParams,
    grid: &CvGrid,
    lambda_grid: &[f64],
) -> Result<(CvReport, CvTimings)> {
    if train.len() < 2 {
        return Err(Error::Data("LOO requires ≥ 2 images".into()));
    }
    let labels: Vec<&[u8]> = train
        .iter()
        .map(|&i| {
            ds.frames[i]
                .labels()
                .ok_or_else(|| Error::Data(format!("frame `{}` has no labels", ds.frames[i].name)))
        })
        .collect::<Result<_>>()?;
    let combos = combinations(kind, base, grid, 1.0);
    if combos.is_empty() {
        return Err(Error::Config("empty cross-validation grid".into()));
    }
    for &i in train {
        let f = &ds.frames[i];
        if f.labels().is_some_and(|y| y.iter().all(|&v| v == y[0])) {
            log::warn!("fold `{}` skipped: held-out labels are single-class", f.name);
        }
    }
    let results: Vec<(CvEntry, f64, f64)> = combos
        .par_iter()
        .map(|c| -> Result<(CvEntry, f64, f64)> {
            let designs = features.design(&c.spec, train)?;
            let params = c.params(base);
            let outcomes: Vec<FoldOutcome> = (0..train.len())
                .into_par_iter()
                .map(|held| run_fold(kind, c.spec, &params, &designs, &labels, held, lambda_grid))
                .collect();
            let fold_j: Vec<Option<f64>> = outcomes.iter().map(|o| o.j).collect();
            let valid: Vec<f64> = fold_j.iter().flatten().copied().collect();
            let mean_j = (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64);
            let errors: Vec<String> = outcomes.iter().filter_map(|o| o.error.clone()).collect();
            let (lambda, threshold) = if errors.is_empty() {
                let pooled: Vec<f64> = outcomes.iter().flat_map(|o| o.posterior.iter().copied()).collect();
                let y: Vec<u8> = labels.iter().flat_map(|l| l.iter().copied()).collect();
                let t = tune_lambda(&pooled, &y, lambda_grid)?;
                (t.lambda, t.threshold)
            } else {
                (1.0, 0.5)
            };
            let n = outcomes.len() as f64;
            let fit = outcomes.iter().map(|o| o.fit_ms).sum::<f64>() / n;
            let pred = outcomes.iter().map(|o| o.predict_ms).sum::<f64>() / n;
            Ok((
                CvEntry {
                    combination: *c,
                    fold_j,
                    mean_j: if errors.is_empty() { mean_j } else { None },
                    lambda,
                    threshold,
                    errors,
                },
                fit,
                pred,
            ))
        })
        .collect::<Result<_>>()?;
    let mut selected: Option<usize> = None;
    for (i, (e, _, _)) in results.iter().enumerate() {
        for msg in &e.errors {
            log::warn!("{:?}: {msg}", e.combination);
        }
        let Some(j) = e.mean_j else { continue };
        if selected.is_none_or(|s| j > results[s].0.mean_j.unwrap_or(f64::NEG_INFINITY)) {
            selected = Some(i);
        }
    }
    let selected = selected.ok_or_else(|| Error::Data("no grid combination produced a valid fold".into()))?;
    let report = CvReport {
        schema_version: SCHEMA_VERSION,
        model: kind,
        params: *base,
        folds: train.iter().map(|&i| ds.frames[i].name.clone()).collect(),
        entries: results.iter().map(|r| r.0.clone()).collect(),
        selected,
    };
    let timings = CvTimings {
        schema_version: SCHEMA_VERSION,
        model: kind,
        fit_ms: results.iter().map(|r| r.1).collect(),
        predict_ms: results.iter().map(|r| r.2).collect(),
    };
    Ok((report, timings))
}

/// Refits the selected combination on every training frame with the
/// cross-validated virtual prior.
pub fn fit_selected(
    ds: &Dataset,
    features: &FeatureSet,
    train: &[usize],
    report: &CvReport,
) -> Result<SegmentationModel> {
    let best = report.best();
    let c = best.combination;
    let designs = features.design(&c.spec, train)?;
    let frames = crate::data::training_frames(&designs, train.iter().map(|&i| &ds.frames[i]))
        .ok_or_else(|| Error::Data("training frames need labels".into()))?;
    let mut model = SegmentationModel::fit(report.model, c.spec, &c.params(&report.params), &frames)?;
    model.lambda = best.lambda;
    model.threshold = best.threshold;
    Ok(model)
}
