//! A single entry point over every segmentation model.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::discriminative::{LinearKind, LinearModel, LinearParams};
use crate::error::{Error, Result};
use crate::eval::{lambda_to_threshold, tune_lambda, TunedThreshold};
use crate::features::{FeatureMatrix, FeatureSpec};
use crate::generative::{
    class1_posterior, fit_gda, fit_gmm, fit_kmeans, fit_nbc, CovarianceMode, GaussianClassModel, GmmParams, KMeansModel,
};
use crate::mrf::{fit_supervised, icm_fit, sa_optimize, CliqueOrder, IcmParams, MrfModel, SaSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gda,
    Nbc,
    Gmm,
    KMeans,
    Mrf,
    SaMrf,
    IcmMrf,
    SaIcmMrf,
    Rr,
    Svc,
    Gp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 11] = [
        Self::Gda,
        Self::Nbc,
        Self::Gmm,
        Self::KMeans,
        Self::Mrf,
        Self::SaMrf,
        Self::IcmMrf,
        Self::SaIcmMrf,
        Self::Rr,
        Self::Svc,
        Self::Gp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gda => "gda",
            Self::Nbc => "nbc",
            Self::Gmm => "gmm",
            Self::KMeans => "k-means",
            Self::Mrf => "mrf",
            Self::SaMrf => "sa-mrf",
            Self::IcmMrf => "icm-mrf",
            Self::SaIcmMrf => "sa-icm-mrf",
            Self::Rr => "rr",
            Self::Svc => "svc",
            Self::Gp => "gp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Fitting uses the pixel labels.
    pub fn is_supervised(&self) -> bool {
        !matches!(self, Self::Gmm | Self::KMeans | Self::IcmMrf | Self::SaIcmMrf)
    }

    /// Prediction needs the pixel lattice, not just feature rows.
    pub fn needs_lattice(&self) -> bool {
        matches!(self, Self::Mrf | Self::SaMrf | Self::IcmMrf | Self::SaIcmMrf)
    }

    /// Only the primal discriminative models use polynomial expansion.
    pub fn uses_expansion(&self) -> bool {
        matches!(self, Self::Rr | Self::Svc | Self::Gp)
    }

    fn linear_kind(&self) -> Option<LinearKind> {
        match self {
            Self::Rr => Some(LinearKind::Rr),
            Self::Svc => Some(LinearKind::Svc),
            Self::Gp => Some(LinearKind::Gp),
            _ => None,
        }
    }
}

/// Hyperparameters of every model family; each family reads its own fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Covariance regularization of the Gaussian likelihoods.
    pub gamma_cov: f64,
    /// `γ` (ridge), `C` (SVC) or prior variance `γ` (GP).
    pub hyperparameter: f64,
    pub beta: f64,
    pub clique_order: CliqueOrder,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Sweep cap of iterated MAP labeling.
    pub max_sweeps: usize,
    pub anneal: SaSchedule,
    pub standardize: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma_cov: 1.0,
            hyperparameter: 1.0,
            beta: 1.0,
            clique_order: CliqueOrder::First,
            seed: 0,
            max_iter: 100,
            tol: 1e-9,
            max_sweeps: 50,
            anneal: SaSchedule::default(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Gaussian(GaussianClassModel),
    KMeans(KMeansModel),
    Mrf(MrfModel),
    Linear(LinearModel),
}

/// One training image: its design matrix (with lattice shape) and labels.
#[derive(Debug, Clone, Copy)]
pub struct TrainingFrame<'a> {
    pub features: &'a FeatureMatrix,
    pub labels: &'a [u8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationModel {
    pub kind: ModelKind,
    pub spec: FeatureSpec,
    pub params: ModelParams,
    pub fitted: FittedModel,
    pub lambda: f64,
    /// Cloud is predicted when the posterior exceeds this value.
    pub threshold: f64,
}

fn stack(frames: &[TrainingFrame<'_>]) -> Result<(FeatureMatrix, Vec<u8>)> {
    let parts: Vec<&FeatureMatrix> = frames.iter().map(|f| f.features).collect();
    let x = FeatureMatrix::vstack(&parts)?;
    let y: Vec<u8> = frames.iter().flat_map(|f| f.labels.iter().copied()).collect();
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    Ok((x, y))
}

impl SegmentationModel {
    /// Fits `kind` on the training frames with the unit virtual prior.
    pub fn fit(kind: ModelKind, spec: FeatureSpec, params: &ModelParams, frames: &[TrainingFrame<'_>]) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Empty("training frames"));
        }
        let orient = spec.variant.temperature_column();
        let fitted = match kind {
            ModelKind::Gda => {
                let (x, y) = stack(frames)?;
                FittedModel::Gaussian(fit_gda(&x, &y, params.gamma_cov, CovarianceMode::Full)?)
            }
            ModelKind::Nbc => {
                let (x, y) = stack(frames)?;
                FittedModel::Gaussian(fit_nbc(&x, &y)?)
            }
            ModelKind::Gmm => {
                let (x, _) = stack(frames)?;
                let gp = GmmParams {
                    components: 2,
                    gamma_cov: params.gamma_cov,
                    seed: params.seed,
                    max_iter: params.max_iter,
                    tol: params.tol,
                };
                FittedModel::Gaussian(fit_gmm(&x, &gp)?.model.oriented(orient))
            }
            ModelKind::KMeans => {
                let (x, _) = stack(frames)?;
                FittedModel::KMeans(fit_kmeans(&x, 2, params.seed, params.max_iter)?.model.oriented(orient))
            }
            ModelKind::Mrf | ModelKind::SaMrf => {
                let (x, y) = stack(frames)?;
                FittedModel::Mrf(fit_supervised(&x, &y, params.gamma_cov, params.beta, params.clique_order)?)
            }
            ModelKind::IcmMrf | ModelKind::SaIcmMrf => {
                let images: Vec<&FeatureMatrix> = frames.iter().map(|f| f.features).collect();
                let ip = IcmParams {
                    gamma_cov: params.gamma_cov,
                    beta: params.beta,
                    clique_order: params.clique_order,
                    seed: params.seed,
                    max_iter: params.max_iter,
                    orient_column: Some(orient),
                };
                FittedModel::Mrf(icm_fit(&images, &ip)?.model)
            }
            ModelKind::Rr | ModelKind::Svc | ModelKind::Gp => {
                let (x, y) = stack(frames)?;
                let lp = LinearParams {
                    hyperparameter: params.hyperparameter,
                    expansion_order: spec.expansion_order,
                    expansion_bias: spec.expansion_bias,
                    standardize: params.standardize,
                    max_iter: params.max_iter,
                    tol: params.tol,
                };
                let lk = kind.linear_kind().expect("linear family");
                FittedModel::Linear(LinearModel::fit(lk, &x, &y, &lp)?)
            }
        };
        Ok(Self {
            kind,
            spec,
            params: *params,
            fitted,
            lambda: 1.0,
            threshold: 0.5,
        })
    }

    /// Cloud posterior of every pixel of one frame.
    pub fn posterior(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        match &self.fitted {
            FittedModel::Gaussian(m) => class1_posterior(m, x),
            FittedModel::KMeans(m) => m.class1_posterior(x),
            FittedModel::Linear(m) => m.predict(x),
            FittedModel::Mrf(m) => {
                let state = match self.kind {
                    ModelKind::SaMrf | ModelKind::SaIcmMrf => sa_optimize(m, x, &self.params.anneal)?.state,
                    _ => m.segment(x, self.params.max_sweeps)?,
                };
                Ok(state.posterior(m.beta, m.clique_order))
            }
        }
    }

    pub fn classify(&self, x: &FeatureMatrix) -> Result<Vec<u8>> {
        Ok(self.posterior(x)?.iter().map(|&p| u8::from(p > self.threshold)).collect())
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
        self.threshold = lambda_to_threshold(lambda);
    }

    pub fn apply_tuning(&mut self, tuned: &TunedThreshold) {
        self.lambda = tuned.lambda;
        self.threshold = tuned.threshold;
    }

    /// Tunes the virtual prior on the posteriors of `frames`.
    pub fn tune_on(&mut self, frames: &[TrainingFrame<'_>], grid: &[f64]) -> Result<TunedThreshold> {
        let mut p = Vec::new();
        let mut y = Vec::new();
        for f in frames {
            p.extend(self.posterior(f.features)?);
            y.extend_from_slice(f.labels);
        }
        let tuned = tune_lambda(&p, &y, grid)?;
        self.apply_tuning(&tuned);
        Ok(tuned)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::default_lambda_grid;
    use crate::features::{FeatureVariant, Neighborhood};
    use alloc::vec;

    fn frame(shift: f64) -> (FeatureMatrix, Vec<u8>) {
        let (w, h) = (8, 6);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let cloud = c >= 4;
                let wiggle = libm::sin((r * w + c) as f64 * 1.7 + shift);
                data.push(if cloud { 30.0 } else { 5.0 } + 2.0 * wiggle);
                data.push(if cloud { 1.0 } else { 9.0 } + libm::cos((r + c) as f64 + shift));
                y.push(u8::from(cloud));
            }
        }
        (FeatureMatrix::new(w * h, 2, data).unwrap().with_shape(w, h).unwrap(), y)
    }

    #[test]
    fn every_kind_segments_an_easy_scene() {
        let (a, ya) = frame(0.0);
        let (b, yb) = frame(1.0);
        let frames = [
            TrainingFrame { features: &a, labels: &ya },
            TrainingFrame { features: &b, labels: &yb },
        ];
        let spec = FeatureSpec::new(FeatureVariant::X1, Neighborhood::Single);
        for kind in ModelKind::ALL {
            let mut m = SegmentationModel::fit(kind, spec, &ModelParams::default(), &frames).unwrap();
            m.tune_on(&frames, &default_lambda_grid()).unwrap();
            let pred = m.classify(&a).unwrap();
            assert_eq!(pred, ya, "{kind:?}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::parse(k.name()), Some(k));
        }
        assert_eq!(ModelKind::parse("nope"), None);
        assert_eq!(vec![ModelKind::Gda].len(), 1);
    }
}
